//! Analytic p-curves and size/bias tables for export.

use pcurve_core::analytic::{
    bin_proportions_with_breaks, build_rhohat_law, equal_partition, PCurveModel, RhoHatLaw, Scenario, Strategy,
};
use pcurve_core::bias_size::{bias_cov, bias_iv, size_cov, size_iv, size_variance, DistortionReport};
use pcurve_core::numkit::{EffectDistribution, Quadrature};
use pcurve_core::{Error, Result};
use serde::Serialize;

/// Settings shared by every curve in one export.
#[derive(Debug, Clone)]
pub struct CurveSpec {
    pub scenario: Scenario,
    pub strategies: Vec<Strategy>,
    pub effect: EffectDistribution,
    pub alpha: f64,
    pub rho: f64,
    pub k: u32,
    pub kappa: f64,
    pub n: usize,
    /// Draws behind the residual autocorrelation law of the variance scenario.
    pub law_draws: usize,
    pub seed: u64,
}

impl CurveSpec {
    pub fn model(&self, strategy: Strategy) -> PCurveModel {
        PCurveModel::new(self.scenario, strategy, self.effect.clone())
            .with_alpha(self.alpha)
            .with_rho(self.rho)
            .with_k(self.k)
            .with_kappa(self.kappa)
            .with_n(self.n)
    }

    pub fn law(&self) -> Result<Option<RhoHatLaw>> {
        if self.scenario == Scenario::VarianceBandwidth {
            build_rhohat_law(self.n, self.law_draws, self.seed).map(Some)
        } else {
            Ok(None)
        }
    }

    fn h_label(&self) -> String {
        match self.effect {
            EffectDistribution::PointMass { h0 } => format!("{h0}"),
            _ => "mixture".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub p: f64,
    pub density: f64,
    pub strategy: String,
    pub scenario: String,
    pub h: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinMass {
    pub lower: f64,
    pub upper: f64,
    pub mass: f64,
    pub strategy: String,
    pub scenario: String,
    pub h: String,
}

fn name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn cells(step: f64) -> Result<usize> {
    if !(step > 0.0 && step < 0.5) {
        return Err(Error::Config(format!("grid step {step} must lie in (0, 0.5)")));
    }
    Ok((1.0 / step).round() as usize)
}

/// Densities at `p = step, 2·step, …` below 1.
pub fn curve(spec: &CurveSpec, step: f64) -> Result<Vec<CurvePoint>> {
    let m = cells(step)?;
    let law = spec.law()?;
    let quad = Quadrature::with_tol(10, 1e-10);
    let mut out = Vec::new();
    for &s in &spec.strategies {
        let model = spec.model(s);
        model.validate()?;
        for i in 1..m {
            let p = i as f64 / m as f64;
            out.push(CurvePoint {
                p,
                density: model.density(p, law.as_ref(), &quad)?,
                strategy: name(&s),
                scenario: name(&spec.scenario),
                h: spec.h_label(),
            });
        }
    }
    Ok(out)
}

/// Masses of equal-width bins over `(0, 1]`.
pub fn bin_masses(spec: &CurveSpec, width: f64) -> Result<Vec<BinMass>> {
    let m = cells(width)?;
    let law = spec.law()?;
    let quad = Quadrature::with_tol(10, 1e-10);
    let edges = equal_partition(0.0, 1.0, m);
    let mut out = Vec::new();
    for &s in &spec.strategies {
        let model = spec.model(s);
        model.validate()?;
        let masses = bin_proportions_with_breaks(
            |p| model.density(p, law.as_ref(), &quad),
            &edges,
            &model.breakpoints(),
        )?;
        for (j, mass) in masses.into_iter().enumerate() {
            out.push(BinMass {
                lower: edges[j],
                upper: edges[j + 1],
                mass,
                strategy: name(&s),
                scenario: name(&spec.scenario),
                h: spec.h_label(),
            });
        }
    }
    Ok(out)
}

/// Grid of size/bias settings.
#[derive(Debug, Clone)]
pub struct DistortionSpec {
    pub scenarios: Vec<Scenario>,
    pub alpha: f64,
    pub h: Vec<f64>,
    pub rho: Vec<f64>,
    pub gamma: Vec<f64>,
    pub n: usize,
    pub kappa: f64,
    pub law_draws: usize,
    pub seed: u64,
}

pub fn distortions(spec: &DistortionSpec) -> Result<Vec<DistortionReport>> {
    let strategies = [Strategy::Threshold, Strategy::Minimum];
    let mut out = Vec::new();
    for &sc in &spec.scenarios {
        match sc {
            Scenario::CovariateSelection | Scenario::DatasetSelection => {
                let rhos: &[f64] = if sc == Scenario::DatasetSelection { &[0.0] } else { &spec.rho };
                for &rho in rhos {
                    let size = size_cov(spec.alpha, rho)?;
                    for &st in &strategies {
                        for &h in &spec.h {
                            let bias = if rho == 0.0 {
                                f64::NAN
                            } else {
                                bias_cov(h, rho, spec.alpha, spec.n, st)?
                            };
                            out.push(DistortionReport {
                                scenario: sc,
                                strategy: st,
                                nominal_size: spec.alpha,
                                empirical_size: size,
                                bias,
                                params: vec![("rho".into(), rho), ("n".into(), spec.n as f64), ("h".into(), h)],
                            });
                        }
                    }
                }
            }
            Scenario::IvSelection => {
                let size = size_iv(spec.alpha)?;
                for &gamma in &spec.gamma {
                    for &st in &strategies {
                        for &h in &spec.h {
                            out.push(DistortionReport {
                                scenario: sc,
                                strategy: st,
                                nominal_size: spec.alpha,
                                empirical_size: size,
                                bias: bias_iv(h, spec.alpha, gamma, st)?,
                                params: vec![("gamma".into(), gamma), ("h".into(), h)],
                            });
                        }
                    }
                }
            }
            Scenario::VarianceBandwidth => {
                let law = build_rhohat_law(spec.n, spec.law_draws, spec.seed)?;
                let size = size_variance(spec.alpha, &law, spec.kappa)?;
                for &st in &strategies {
                    out.push(DistortionReport {
                        scenario: sc,
                        strategy: st,
                        nominal_size: spec.alpha,
                        empirical_size: size,
                        // the point estimate is not selected, only its standard error
                        bias: 0.0,
                        params: vec![("n".into(), spec.n as f64), ("kappa".into(), spec.kappa)],
                    });
                }
            }
        }
    }
    Ok(out)
}
