use daeindex::arrays::pointwise_profile;
use daeindex::frameworks::all_profiles;
use daeindex::generator::{self, DEFAULT_CONDITION_BOUND};
use daeindex::{fixtures, CharacteristicProfile, DaeProblem, Point};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Case {
    name: &'static str,
    problem: DaeProblem,
    t: f64,
    r: usize,
    thetas: Vec<usize>,
}

fn cases() -> Vec<Case> {
    let c = |name, problem, t, r, thetas: &[usize]| Case {
        name,
        problem,
        t,
        r,
        thetas: thetas.to_vec(),
    };
    vec![
        c("kronecker blocks", fixtures::kronecker_blocks(), 0.5, 4, &[3, 1, 0]),
        c("theta switch, alpha + beta != 0", fixtures::theta_switch(&[0.0, 0.0, 1.0], &[1.0], 0.0, 1.0), 0.5, 2, &[1, 1, 0]),
        c("theta switch, beta = -alpha", fixtures::theta_switch(&[0.0, 0.0, 1.0], &[0.0, 0.0, -1.0], 0.0, 1.0), 0.5, 2, &[2, 0]),
        c("degree pair off t = 1", fixtures::degree_pair(), 0.5, 1, &[0]),
        c("scf harmless, left part", fixtures::scf_harmless(), -0.5, 1, &[0]),
        c("scf harmless, right part", fixtures::scf_harmless(), 0.5, 2, &[1, 0]),
        c("index one scf", fixtures::index_one_scf(), 0.5, 1, &[0]),
    ]
}

fn line(ok: bool, name: &str, detail: &str) -> bool {
    println!("{} {name}{}", if ok { "PASS" } else { "FAIL" }, if detail.is_empty() { String::new() } else { format!(": {detail}") });
    ok
}

pub fn run(round_trips: usize) -> bool {
    let mut all = true;
    for c in cases() {
        let m = c.problem.m();
        let want = CharacteristicProfile::from_thetas(m, c.r, c.thetas.clone()).expect("valid expected profile");
        let p = Point::new(c.t);
        let mut bad = Vec::new();
        match pointwise_profile(&c.problem, p, m) {
            Ok((got, _)) if got == want => {}
            Ok((got, _)) => bad.push(format!("arrays {got}")),
            Err(e) => bad.push(format!("arrays: {e}")),
        }
        for (name, r) in all_profiles(&c.problem, p) {
            match r {
                Ok(got) if got == want => {}
                Ok(got) => bad.push(format!("{name} {got}")),
                Err(e) => bad.push(format!("{name}: {e}")),
            }
        }
        all &= line(bad.is_empty(), c.name, &bad.join("; "));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut failures = Vec::new();
    for i in 0..round_trips {
        let spec = generator::random_spec(&mut rng, 12, 5);
        let res = generator::generate(&spec, Some(2), DEFAULT_CONDITION_BOUND).and_then(|g| {
            let m = g.problem.m();
            let mid = 0.5 * (g.spec.interval.0 + g.spec.interval.1);
            pointwise_profile(&g.problem, Point::new(mid), m).map(|(p, _)| (p, g.expected))
        });
        match res {
            Ok((got, want)) if got == want => {}
            Ok((got, want)) => failures.push(format!("#{i}: {got} instead of {want}")),
            Err(e) => failures.push(format!("#{i}: {e}")),
        }
    }
    all &= line(
        failures.is_empty(),
        &format!("generator round trip ({} of {round_trips})", round_trips - failures.len()),
        &failures.join("; "),
    );
    all
}
