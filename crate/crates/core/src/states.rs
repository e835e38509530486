//! Named example states and seeded random states.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QsrError, Result};
use crate::tensor::{gaussian_matrix, Part, PureState, SystemLayout};

pub const CATALOG: [&str; 12] = [
    "ghz",
    "ebit",
    "max_entangled",
    "random_pure",
    "phi1",
    "phi2",
    "phi3",
    "phi4",
    "phi5",
    "phi6",
    "phi7",
    "phi8",
];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Angle of `cos θ|00⟩ + sin θ|11⟩`; `π/4` is the ebit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Per-pair angles for `phi2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub name: String,
    #[serde(default)]
    pub params: StateParams,
}

impl StateSpec {
    pub fn named(name: &str) -> Self {
        StateSpec {
            name: name.to_string(),
            params: StateParams::default(),
        }
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.params.m = Some(m);
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.params.theta = Some(theta);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.params.seed = Some(seed);
        self
    }

    pub fn make(&self) -> Result<PureState> {
        make(self)
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn check_theta(theta: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(QsrError::InvalidSpec(format!(
            "theta {theta} not in [0, pi/2]"
        )));
    }
    Ok(theta)
}

fn fixed_m(p: &StateParams, name: &str, m: usize) -> Result<usize> {
    match p.m {
        Some(x) if x != m => Err(QsrError::InvalidSpec(format!(
            "{name} is defined for M = {m}, got {x}"
        ))),
        _ => Ok(m),
    }
}

fn min_m(p: &StateParams, name: &str, default: usize, least: usize) -> Result<usize> {
    let m = p.m.unwrap_or(default);
    if m < least {
        return Err(QsrError::InvalidSpec(format!(
            "{name} needs M >= {least}, got {m}"
        )));
    }
    Ok(m)
}

/// State over `layout` with the given nonzero amplitudes (one digit per part), normalized.
fn from_terms(layout: SystemLayout, terms: &[(Vec<usize>, Complex64)]) -> Result<PureState> {
    let dims = layout.dims();
    let mut amps = vec![c(0.0); layout.total_dim()];
    for (digits, a) in terms {
        let idx = digits
            .iter()
            .zip(&dims)
            .fold(0, |acc, (&x, &d)| acc * d + x);
        amps[idx] += a;
    }
    PureState::normalized(layout, amps)
}

/// Users with the given dimensions followed by a one-dimensional environment.
fn users_layout(dims: &[usize]) -> Result<SystemLayout> {
    let mut parts: Vec<Part> = dims
        .iter()
        .enumerate()
        .map(|(i, &d)| Part::new(format!("A{}", i + 1), d))
        .collect();
    parts.push(Part::new("E", 1));
    SystemLayout::new(parts, Some(dims.len()), None)
}

/// `cos θ|00⟩ + sin θ|11⟩` on users `a < b` of an `m`-qubit register, everything else `|0⟩`.
fn pair_on(m: usize, a: usize, b: usize, theta: f64) -> Result<PureState> {
    let (cs, sn) = (theta.cos(), theta.sin());
    let mut one = vec![0; m + 1];
    one[a] = 1;
    one[b] = 1;
    from_terms(
        users_layout(&vec![2; m])?,
        &[(vec![0; m + 1], c(cs)), (one, c(sn))],
    )
}

/// Users `A_1..A_M` (qubits) each entangled with its own environment qubit `E_i`
/// as `cos θ_i|00⟩ + sin θ_i|11⟩`; the environment is one part with factors `[2; M]`.
fn paired_with_env(thetas: &[f64]) -> Result<PureState> {
    let m = thetas.len();
    let mut parts: Vec<Part> = (1..=m).map(|i| Part::new(format!("A{i}"), 2)).collect();
    parts.push(Part::new("E", 1 << m));
    let layout = SystemLayout::new(parts, Some(m), Some(vec![2; m]))?;
    let mut amps = vec![c(0.0); layout.total_dim()];
    for bits in 0..1usize << m {
        let mut a = 1.0;
        for (i, &t) in thetas.iter().enumerate() {
            let bit = bits >> (m - 1 - i) & 1;
            a *= if bit == 1 { t.sin() } else { t.cos() };
        }
        amps[(bits << m) | bits] = c(a);
    }
    PureState::new(layout, amps)
}

/// Two GHZ states whose legs sit on the two qubits of each user in `ghz_users`;
/// those users have dimension 4, all others are qubits in `|0⟩`.
fn two_ghz(m: usize, ghz_users: &[usize]) -> Result<PureState> {
    let dims: Vec<usize> = (0..m)
        .map(|i| if ghz_users.contains(&i) { 4 } else { 2 })
        .collect();
    let mut terms = Vec::new();
    for g1 in 0..2 {
        for g2 in 0..2 {
            let mut digits = vec![0; m + 1];
            for &u in ghz_users {
                digits[u] = 2 * g1 + g2;
            }
            terms.push((digits, c(1.0)));
        }
    }
    from_terms(users_layout(&dims)?, &terms)
}

/// Amplitudes drawn from a seeded standard complex Gaussian, then normalized.
pub fn random_pure(layout: &SystemLayout, seed: u64) -> Result<PureState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix(layout.total_dim(), 1, &mut rng);
    PureState::normalized(layout.clone(), g.iter().copied().collect())
}

pub fn make(spec: &StateSpec) -> Result<PureState> {
    let p = &spec.params;
    let theta = check_theta(p.theta.unwrap_or(FRAC_PI_4))?;
    match spec.name.as_str() {
        "ghz" => {
            let m = min_m(p, "ghz", 3, 2)?;
            from_terms(
                users_layout(&vec![2; m])?,
                &[
                    (vec![0; m + 1], c(1.0)),
                    ([vec![1; m], vec![0]].concat(), c(1.0)),
                ],
            )
        }
        "ebit" => {
            fixed_m(p, "ebit", 2)?;
            pair_on(2, 0, 1, theta)
        }
        "max_entangled" => {
            fixed_m(p, "max_entangled", 2)?;
            let d = p.d.unwrap_or(2);
            if d < 2 {
                return Err(QsrError::InvalidSpec(format!("d = {d} < 2")));
            }
            let terms: Vec<_> = (0..d).map(|i| (vec![i, i, 0], c(1.0))).collect();
            from_terms(users_layout(&[d, d])?, &terms)
        }
        "random_pure" => {
            let m = min_m(p, "random_pure", 3, 1)?;
            let d = p.d.unwrap_or(2);
            if d < 2 {
                return Err(QsrError::InvalidSpec(format!("d = {d} < 2")));
            }
            let layout = SystemLayout::uniform(m, d, p.env_dim.unwrap_or(1))?;
            random_pure(&layout, p.seed.unwrap_or(0))
        }
        "phi1" => {
            fixed_m(p, "phi1", 3)?;
            pair_on(3, 0, 1, theta)
        }
        "phi2" => {
            let thetas = match &p.thetas {
                Some(t) => {
                    if p.m.is_some_and(|m| m != t.len()) {
                        return Err(QsrError::InvalidSpec("thetas length differs from M".into()));
                    }
                    if t.len() < 2 {
                        return Err(QsrError::InvalidSpec("phi2 needs M >= 2".into()));
                    }
                    t.iter()
                        .map(|&x| check_theta(x))
                        .collect::<Result<Vec<_>>>()?
                }
                None => vec![theta; min_m(p, "phi2", 3, 2)?],
            };
            paired_with_env(&thetas)
        }
        "phi3" => {
            fixed_m(p, "phi3", 4)?;
            pair_on(4, 0, 2, theta)
        }
        "phi4" => {
            if p.thetas.is_some() {
                return Err(QsrError::InvalidSpec(
                    "phi4 uses one angle for every pair".into(),
                ));
            }
            paired_with_env(&vec![theta; min_m(p, "phi4", 3, 2)?])
        }
        "phi5" => two_ghz(min_m(p, "phi5", 6, 6)?, &[0, 2, 4]),
        "phi6" => {
            fixed_m(p, "phi6", 4)?;
            two_ghz(4, &[0, 1, 2])
        }
        "phi7" => {
            fixed_m(p, "phi7", 4)?;
            pair_on(4, 1, 2, theta)
        }
        "phi8" => {
            fixed_m(p, "phi8", 3)?;
            pair_on(3, 1, 2, theta)
        }
        other => Err(QsrError::InvalidSpec(format!("unknown state '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::RotationTask;
    use crate::tensor::SubsetMask;

    fn task(spec: StateSpec) -> RotationTask {
        RotationTask::new(&spec.make().unwrap()).unwrap()
    }

    fn h(t: &RotationTask, users: &[usize]) -> f64 {
        t.h(t.users(users).unwrap(), false).unwrap()
    }

    #[test]
    fn whole_catalog_builds_with_defaults() {
        for name in CATALOG {
            let s = StateSpec::named(name).make().unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-12, "{name}");
        }
    }

    #[test]
    fn ebit_and_ghz_marginals() {
        let t = task(StateSpec::named("ebit"));
        assert!((t.h_user(0).unwrap() - 1.0).abs() < 1e-12);
        let g = task(StateSpec::named("ghz"));
        assert!((h(&g, &[0, 1]) - 1.0).abs() < 1e-12);
        let me = task(StateSpec {
            name: "max_entangled".into(),
            params: StateParams {
                d: Some(3),
                ..Default::default()
            },
        });
        assert!((me.h_user(0).unwrap() - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn phi5_marginals() {
        let t = task(StateSpec::named("phi5").with_m(6));
        assert!((t.h_user(0).unwrap() - 2.0).abs() < 1e-12);
        assert!((h(&t, &[0, 2]) - 2.0).abs() < 1e-12);
        assert!(t.h_user(1).unwrap().abs() < 1e-12);
        assert!(StateSpec::named("phi5").with_m(5).make().is_err());
        assert_eq!(task(StateSpec::named("phi5").with_m(7)).m(), 7);
    }

    #[test]
    fn phi3_decomposes() {
        let t = task(StateSpec::named("phi3"));
        assert!(h(&t, &[0, 2]).abs() < 1e-12);
        assert!(t.h_user(1).unwrap().abs() < 1e-12);
        assert!(t.h_user(3).unwrap().abs() < 1e-12);
        assert!((t.h_user(0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phi2_and_phi4_pair_entropies() {
        for name in ["phi2", "phi4"] {
            let t = task(StateSpec::named(name).with_m(4));
            assert_eq!(t.env_dim(), 16);
            for i in 0..4 {
                assert!((t.h_user(i).unwrap() - 1.0).abs() < 1e-12);
                assert!((t.env_given_user(i).unwrap() - 2.0).abs() < 1e-12);
            }
        }
        let spec = StateSpec {
            name: "phi2".into(),
            params: StateParams {
                thetas: Some(vec![0.3, 0.6, 1.0]),
                ..Default::default()
            },
        };
        let t = task(spec);
        let hb = |x: f64| crate::entropy::binary_entropy(x.cos().powi(2)).unwrap();
        for (i, th) in [0.3, 0.6, 1.0].into_iter().enumerate() {
            assert!((t.h_user(i).unwrap() - hb(th)).abs() < 1e-12);
        }
    }

    #[test]
    fn phi6_phi7_phi8_layouts() {
        let t6 = task(StateSpec::named("phi6"));
        assert_eq!(t6.state().layout().dims(), vec![4, 4, 4, 2, 1]);
        assert!((t6.h_user(0).unwrap() - 2.0).abs() < 1e-12);
        let t7 = task(StateSpec::named("phi7"));
        assert!((t7.h_user(1).unwrap() - 1.0).abs() < 1e-12);
        assert!(t7.h_user(0).unwrap().abs() < 1e-12);
        let t8 = task(StateSpec::named("phi8"));
        assert!((t8.h_user(2).unwrap() - 1.0).abs() < 1e-12);
        assert!(StateSpec::named("phi7").with_m(5).make().is_err());
    }

    #[test]
    fn invalid_parameters() {
        assert!(StateSpec::named("ebit").with_theta(2.0).make().is_err());
        assert!(StateSpec::named("nope").make().is_err());
        assert!(
            serde_json::from_str::<StateSpec>(r#"{"name":"ghz","params":{"bogus":1}}"#).is_err()
        );
        let s: StateSpec =
            serde_json::from_str(r#"{"name":"phi2","params":{"m":3,"theta":0.5}}"#).unwrap();
        assert_eq!(s.make().unwrap().num_users(), 3);
    }

    #[test]
    fn random_pure_is_seeded() {
        let l = SystemLayout::qubits(3, 1).unwrap();
        let a = random_pure(&l, 9).unwrap();
        assert_eq!(a, random_pure(&l, 9).unwrap());
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert_ne!(a, random_pure(&l, 10).unwrap());
        let big = SystemLayout::qubits(13, 1);
        assert!(big.is_err());
    }

    #[test]
    fn single_party_subset_of_phi3() {
        let s = StateSpec::named("phi3").make().unwrap();
        let parts = s
            .layout()
            .users_to_parts(SubsetMask::from_indices(4, &[0]).unwrap(), false)
            .unwrap();
        assert!((crate::entropy::subset_entropy(&s, parts).unwrap() - 1.0).abs() < 1e-12);
    }
}
