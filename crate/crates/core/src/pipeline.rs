//! The analysis chain cycle → frame → bifurcation functions → degree.

use serde::Serialize;
use thiserror::Error;

use crate::bifurcation::{Bifurcation, BifurcationError, BifurcationProfile};
use crate::cycle::{find_limit_cycle, CycleError, CycleSummary, LimitCycle};
use crate::degree::{assess_theorem3, DegreeError, DegreeReport};
use crate::floquet::{FloquetError, FloquetFrame, FloquetSummary};
use crate::model::{AnalysisSettings, PlanarSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("cycle: {0}")]
    Cycle(#[from] CycleError),
    #[error("floquet: {0}")]
    Floquet(#[from] FloquetError),
    #[error("bifurcation: {0}")]
    Bifurcation(#[from] BifurcationError),
    #[error("degree: {0}")]
    Degree(#[from] DegreeError),
}

impl AnalysisError {
    /// True when the input violates a standing hypothesis (non-simple
    /// multiplier 1, identically vanishing `f0`, `F` vanishing on the cycle)
    /// rather than a solver failing.
    pub fn is_hypothesis_failure(&self) -> bool {
        match self {
            AnalysisError::Cycle(e) => matches!(e, CycleError::SingularJacobian(_)),
            AnalysisError::Floquet(e) => matches!(e, FloquetError::ComplexMultipliers | FloquetError::NotHyperbolic { .. }),
            AnalysisError::Bifurcation(e) => matches!(e, BifurcationError::Degenerate { .. }),
            AnalysisError::Degree(e) => matches!(e, DegreeError::ZeroOnBoundary { .. }),
        }
    }
}

/// Everything computed for one configuration.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub cycle: LimitCycle,
    pub frame: FloquetFrame,
    pub bifurcation: Bifurcation,
    pub profile: BifurcationProfile,
    pub degree: DegreeReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisSummary {
    pub cycle: CycleSummary,
    pub floquet: FloquetSummary,
    pub bifurcation: BifurcationProfile,
    pub degree: DegreeReport,
}

impl Analysis {
    pub fn summary(&self) -> AnalysisSummary {
        AnalysisSummary {
            cycle: self.cycle.summary(),
            floquet: self.frame.summary(),
            bifurcation: self.profile.clone(),
            degree: self.degree.clone(),
        }
    }
}

/// Cycle, frame and bifurcation functions; stops before the degree.
pub fn prepare(system: &PlanarSystem, settings: &AnalysisSettings) -> Result<(LimitCycle, FloquetFrame, Bifurcation, BifurcationProfile), AnalysisError> {
    let cycle = find_limit_cycle(system, settings.seed(), settings.period_guess, settings.tol)?;
    let frame = FloquetFrame::build(system, &cycle, settings.frame_grid, settings.tol)?;
    let bifurcation = Bifurcation::new(&frame, system);
    let profile = bifurcation.profile(settings.theta_grid)?;
    Ok((cycle, frame, bifurcation, profile))
}

pub fn analyze(system: &PlanarSystem, settings: &AnalysisSettings) -> Result<Analysis, AnalysisError> {
    let (cycle, frame, bifurcation, profile) = prepare(system, settings)?;
    let degree = assess_theorem3(&bifurcation, &profile, settings.degree_grid)?;
    Ok(Analysis {
        cycle,
        frame,
        bifurcation,
        profile,
        degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec2;

    fn settings() -> AnalysisSettings {
        AnalysisSettings {
            seed: [1.3, 0.0],
            tol: 1e-12,
            theta_grid: 128,
            degree_grid: 128,
            ..AnalysisSettings::default()
        }
    }

    #[test]
    fn hopf_rot_end_to_end() {
        let a = analyze(&PlanarSystem::hopf_rot(), &settings()).unwrap();
        assert_eq!(a.degree.d_b, 0);
        assert!(a.degree.theorem3_applicable);
        assert_eq!(a.profile.zeros.len(), 2);
    }

    #[test]
    fn failures_are_classified() {
        let e = analyze(&PlanarSystem::hopf(), &settings()).unwrap_err();
        assert!(matches!(e, AnalysisError::Bifurcation(BifurcationError::Degenerate { .. })));
        assert!(e.is_hypothesis_failure());
        let e = analyze(&PlanarSystem::rotation(), &settings()).unwrap_err();
        assert!(e.is_hypothesis_failure(), "{e}");
        let far = AnalysisSettings {
            seed: [0.0, 0.0],
            ..settings()
        };
        let e = analyze(&PlanarSystem::hopf_rot(), &far).unwrap_err();
        assert!(!e.is_hypothesis_failure(), "{e}");
        // φ = (cos t, sin t) + 2 sin 2t · x makes F vanish at x0(0)
        let sys = PlanarSystem::hopf().with_forcing(|t, x: &Vec2, _| Vec2::new(t.cos(), t.sin()) + x * (2.0 * (2.0 * t).sin()));
        let e = analyze(&sys, &settings()).unwrap_err();
        assert!(matches!(e, AnalysisError::Degree(DegreeError::ZeroOnBoundary { .. })), "{e}");
    }
}
