//! Second-order effective Hamiltonian for `N` channels driven at a common
//! detuning `δ`:
//!
//! ```text
//! H_I(t)  = Σ_k λ_k (A_k e^{iδt} + A_k† e^{−iδt})
//! H_eff   = Σ_{j,k} (λ_j λ_k / δ) [A_j, A_k†]
//! ```
//!
//! The diagonal `j = k` terms give the Stark shifts; the cross terms couple the
//! channels. Only the common-detuning case is supported.

use std::collections::BTreeSet;

use crate::algebra::{AtomOp, BosonString, Coefficient, Level, OperatorExpr};
use crate::error::{Error, Result};
use crate::fock::{realize, SpaceSpec};
use crate::params::Params;

/// One drive term `λ (A e^{iδt} + h.c.)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub lambda: Coefficient,
    pub operator: OperatorExpr,
}

impl Channel {
    pub fn new(lambda: Coefficient, operator: OperatorExpr) -> Self {
        Self { lambda, operator }
    }

    /// Coupling given by a single parameter symbol.
    pub fn symbol(lambda: &str, operator: OperatorExpr) -> Self {
        Self::new(Coefficient::symbol(lambda), operator)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    channels: Vec<Channel>,
    delta: String,
}

impl ChannelSpec {
    pub fn new(channels: Vec<Channel>, delta: impl Into<String>) -> Result<Self> {
        let delta = delta.into();
        if channels.is_empty() {
            return Err(Error::InvalidSpec("at least one channel is required".into()));
        }
        for (k, ch) in channels.iter().enumerate() {
            if !ch.lambda.is_real() {
                return Err(Error::InvalidSpec(format!("coupling `{}` of channel {k} is not real", ch.lambda)));
            }
            if ch.lambda.symbols.exponent(&delta) != 0 {
                return Err(Error::InvalidSpec(format!("detuning `{delta}` also appears in coupling `{}`", ch.lambda)));
            }
            if ch.operator.is_zero() {
                return Err(Error::InvalidSpec(format!("operator of channel {k} is zero")));
            }
        }
        Ok(Self { channels, delta })
    }

    /// Builds a spec from channels that each name their own detuning symbol;
    /// all of them must agree.
    pub fn with_detunings(channels: Vec<(Channel, String)>) -> Result<Self> {
        let distinct: BTreeSet<&String> = channels.iter().map(|(_, d)| d).collect();
        match distinct.len() {
            0 => Err(Error::InvalidSpec("at least one channel is required".into())),
            1 => {
                let delta = distinct.into_iter().next().cloned().unwrap_or_default();
                Self::new(channels.into_iter().map(|(c, _)| c).collect(), delta)
            }
            _ => Err(Error::DistinctDetunings(distinct.into_iter().cloned().collect())),
        }
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn delta(&self) -> &str {
        &self.delta
    }

    /// Every parameter symbol the model needs bound.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = BTreeSet::new();
        out.insert(self.delta.clone());
        for ch in &self.channels {
            out.extend(ch.lambda.symbols.iter().map(|(s, _)| s.to_string()));
            out.extend(ch.operator.symbols());
        }
        out
    }

    pub fn levels(&self) -> BTreeSet<Level> {
        self.channels.iter().flat_map(|c| c.operator.levels()).collect()
    }

    /// The slowly-varying drive amplitude `B = Σ_k λ_k A_k`, so that
    /// `H_I(t) = e^{iδt} B + e^{−iδt} B†`.
    pub fn drive_operator(&self) -> OperatorExpr {
        self.channels.iter().fold(OperatorExpr::zero(), |acc, ch| &acc + &ch.operator.scale(&ch.lambda))
    }
}

pub fn effective_hamiltonian(spec: &ChannelSpec) -> OperatorExpr {
    let inv_delta = Coefficient::ratio_of_symbols(&[], &[spec.delta()]);
    let mut h = OperatorExpr::zero();
    for cj in spec.channels() {
        for ck in spec.channels() {
            let weight = &(&cj.lambda * &ck.lambda) * &inv_delta;
            let comm = cj.operator.commutator(&ck.operator.adjoint());
            h = &h + &comm.scale(&weight);
        }
    }
    h
}

/// Upper bound `Σ_k (2|λ_k|/|δ|)·‖A_k‖` on the norm of the neglected
/// first-order Dyson term, valid at every time.
pub fn first_order_remainder_bound(spec: &ChannelSpec, params: &Params, space: &SpaceSpec) -> Result<f64> {
    let delta = params.get(spec.delta())?;
    if delta == 0.0 {
        return Err(Error::InvalidSpec("detuning must be nonzero".into()));
    }
    spec.channels().iter().try_fold(0.0, |acc, ch| {
        let lambda = ch.lambda.evaluate_real(params)?;
        let norm = realize(&ch.operator, space, params)?.opnorm();
        Ok(acc + 2.0 * lambda.abs() / delta.abs() * norm)
    })
}

/// Monomials of an effective Hamiltonian sorted by shape.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Decomposition {
    pub stark: OperatorExpr,
    pub one_photon: OperatorExpr,
    pub two_photon: OperatorExpr,
    pub displacement: OperatorExpr,
    pub other: OperatorExpr,
}

impl Decomposition {
    pub fn total(&self) -> OperatorExpr {
        [&self.one_photon, &self.two_photon, &self.displacement, &self.other]
            .into_iter()
            .fold(self.stark.clone(), |acc, p| &acc + p)
    }

    pub fn parts(&self) -> [(&'static str, &OperatorExpr); 5] {
        [
            ("stark", &self.stark),
            ("one_photon", &self.one_photon),
            ("two_photon", &self.two_photon),
            ("displacement", &self.displacement),
            ("other", &self.other),
        ]
    }
}

/// Partitions `h` relative to the (ground, excited) pair:
///
/// * stark: diagonal atom × {1, a†a}
/// * one_photon: σ_eg a, σ_ge a†
/// * two_photon: σ_eg a², σ_ge a†²
/// * displacement: diagonal atom × {a, a†}
/// * other: anything else
pub fn decompose(h: &OperatorExpr, ground: &Level, excited: &Level) -> Decomposition {
    let mut d = Decomposition::default();
    for m in h.terms() {
        let lowering = m.atom == AtomOp::Transition(ground.clone(), excited.clone());
        let raising = m.atom == AtomOp::Transition(excited.clone(), ground.clone());
        let b = m.boson;
        let part = if m.atom.is_diagonal() {
            match (b.creators, b.annihilators) {
                (0, 0) | (1, 1) => &mut d.stark,
                (1, 0) | (0, 1) => &mut d.displacement,
                _ => &mut d.other,
            }
        } else if (raising && b == BosonString::new(0, 1)) || (lowering && b == BosonString::new(1, 0)) {
            &mut d.one_photon
        } else if (raising && b == BosonString::new(0, 2)) || (lowering && b == BosonString::new(2, 0)) {
            &mut d.two_photon
        } else {
            &mut d.other
        };
        *part = &*part + &OperatorExpr::from_monomial(m);
    }
    d
}
