use serde::{Deserialize, Serialize};

/// Raw parameter tuple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MsaInputs {
    pub d: usize,
    pub p: f64,
    pub p_tilde: f64,
    pub sigma: f64,
    pub sigma_prime: f64,
    pub tau: f64,
    pub rho1: f64,
    pub n1: u32,
    /// Exponent for the localization ladder; defaults to `rho1`.
    #[serde(default)]
    pub rho: Option<f64>,
    pub eta: f64,
    pub gamma: f64,
    /// Rate of decay `m` of the good scales.
    pub m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintVerdict {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MsaParams {
    pub inputs: MsaInputs,
    pub rho: f64,
    pub rho2: f64,
    pub beta: f64,
    pub theta: f64,
    pub hat_n: u32,
    pub big_m: f64,
    pub hat_m: f64,
    pub rho1_window: Option<(f64, f64)>,
    pub gamma_window: Option<(f64, f64)>,
    pub verdicts: Vec<ConstraintVerdict>,
}

impl MsaParams {
    pub fn feasible(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }

    /// `L_n = L^{ρ^n}`, `n = 0..=n1`.
    pub fn nested_scales(&self, l: f64) -> Vec<f64> {
        (0..=self.inputs.n1).map(|n| l.powf(self.rho.powi(n as i32))).collect()
    }

    /// `(L₋, L₊) = (499L/500, 1001L/500)`.
    pub fn annulus_scales(l: f64) -> (f64, f64) {
        (499.0 * l / 500.0, 1001.0 * l / 500.0)
    }

    /// `e^{−M L^ϑ}`, the margin defining the shrunken window at scale `L`.
    pub fn window_margin(&self, l: f64) -> f64 {
        (-self.big_m * l.powf(self.theta)).exp()
    }
}

/// `n̂(p) = min{n ∈ ℕ : 2^{1/n} − 1 < p}`.
pub fn hat_n(p: f64) -> u32 {
    assert!(p > 0.0, "p must be positive");
    let mut n = 1u32;
    while 2f64.powf(1.0 / n as f64) - 1.0 >= p {
        n += 1;
    }
    n
}

pub fn rhos_holds(p: f64, sigma: f64, sigma_prime: f64, rho1: f64, n1: u32) -> bool {
    let rho2 = rho1.powi(n1 as i32);
    1.0 / (1.0 + p) < rho1 && rho1 < 0.75 * (1.0 - sigma) && p < 0.5 * rho1 * (1.0 - sigma_prime) - rho2
}

pub fn prho2n1_holds(p: f64, p_tilde: f64, rho: f64, n1: u32) -> bool {
    let beta = rho.powi(n1 as i32);
    1.0 / (1.0 + p) < rho && rho < 1.0 && (n1 as f64 + 1.0) * beta < p - p_tilde
}

/// `(γ − 1, 1/(2γ))` when non-empty.
pub fn gamma_window(gamma: f64) -> Option<(f64, f64)> {
    let (lo, hi) = (gamma - 1.0, 1.0 / (2.0 * gamma));
    (gamma > 0.0 && lo < hi).then_some((lo, hi))
}

/// The open set of `ρ1` satisfying the box constraints with `ρ2 = ρ1^{n1}`.
///
/// `ρ ↦ ρ(1−ς′)/2 − ρ^{n1}` is concave, so its superlevel set is an interval.
pub fn rho1_window(p: f64, sigma: f64, sigma_prime: f64, n1: u32) -> Option<(f64, f64)> {
    let (a, b) = (1.0 / (1.0 + p), 0.75 * (1.0 - sigma));
    if a >= b || n1 < 2 {
        return None;
    }
    let c = 0.5 * (1.0 - sigma_prime);
    let f = |r: f64| c * r - r.powi(n1 as i32) - p;
    let peak = (c / n1 as f64).powf(1.0 / (n1 as f64 - 1.0));
    let top = peak.clamp(a, b);
    if f(top) <= 0.0 {
        return None;
    }
    let bisect = |mut lo: f64, mut hi: f64, rising: bool| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == rising {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let lo = if f(a) > 0.0 { a } else { bisect(a, top, true) };
    let hi = if f(b) > 0.0 { b } else { bisect(top, b, false) };
    Some((lo, hi))
}

/// Smallest `n1 ≥ 1` with `p < ρ1(1−ς′)/2 − ρ1^{n1}`, if any.
pub fn minimal_n1(p: f64, sigma_prime: f64, rho1: f64) -> Option<u32> {
    let slack = 0.5 * rho1 * (1.0 - sigma_prime) - p;
    if slack <= 0.0 || !(0.0..1.0).contains(&rho1) || rho1 == 0.0 {
        return None;
    }
    let mut n = ((slack.ln() / rho1.ln()).floor() as i64).max(1) as u32;
    while rho1.powi(n as i32) >= slack {
        n += 1;
    }
    while n > 1 && rho1.powi(n as i32 - 1) < slack {
        n -= 1;
    }
    Some(n)
}

pub fn msa_constants(inputs: &MsaInputs) -> MsaParams {
    let i = inputs;
    let rho = i.rho.unwrap_or(i.rho1);
    let rho2 = i.rho1.powi(i.n1 as i32);
    let beta = rho.powi(i.n1 as i32);
    let theta = beta / 2.0;
    let hn = if i.p > 0.0 { hat_n(i.p) } else { 0 };
    let big_m = i.m / 30f64.powi(hn as i32 + 2);
    let mut verdicts = vec![];
    let mut push = |name: &str, holds: bool, detail: String| {
        verdicts.push(ConstraintVerdict {
            name: name.into(),
            holds,
            detail,
        })
    };
    push(
        "ranges",
        i.d >= 1
            && i.p > 0.0
            && (0.0..i.p).contains(&i.p_tilde)
            && i.p_tilde > 0.0
            && [i.sigma, i.sigma_prime, i.tau, i.rho1].iter().all(|v| *v > 0.0 && *v < 1.0)
            && i.tau < i.sigma
            && i.eta > 0.0
            && i.m > 0.0,
        "0<p̃<p, ς,ς′,τ,ρ1 ∈ ]0,1[, τ<ς, η>0, m>0".into(),
    );
    push(
        "p_window",
        i.p > 1.0 / 3.0 && i.p < 3.0 / 8.0,
        format!("p = {} in ]1/3, 3/8[", i.p),
    );
    push(
        "rhos",
        rhos_holds(i.p, i.sigma, i.sigma_prime, i.rho1, i.n1),
        format!(
            "1/(1+p) = {:.6} < ρ1 = {} < 3(1−ς)/4 = {:.6}; ρ1(1−ς′)/2 − ρ2 = {:.6} vs p",
            1.0 / (1.0 + i.p),
            i.rho1,
            0.75 * (1.0 - i.sigma),
            0.5 * i.rho1 * (1.0 - i.sigma_prime) - rho2
        ),
    );
    push(
        "prho2n1",
        prho2n1_holds(i.p, i.p_tilde, rho, i.n1),
        format!("(n1+1)β = {:.6e} vs p − p̃ = {:.6e}", (i.n1 as f64 + 1.0) * beta, i.p - i.p_tilde),
    );
    let gw = gamma_window(i.gamma);
    push(
        "gamma",
        gw.is_some_and(|(lo, hi)| lo < i.p && i.p < hi) && i.rho1 < (1.0 - i.sigma) / i.gamma,
        format!("γ = {}: need γ−1 < p < 1/(2γ) and ρ1 < (1−ς)/γ", i.gamma),
    );
    MsaParams {
        inputs: inputs.clone(),
        rho,
        rho2,
        beta,
        theta,
        hat_n: hn,
        big_m,
        hat_m: 30.0 * big_m,
        rho1_window: rho1_window(i.p, i.sigma, i.sigma_prime, i.n1),
        gamma_window: gw,
        verdicts,
    }
}
