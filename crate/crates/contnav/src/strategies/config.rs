//! Strategy selection and hyperparameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    Vanilla,
    Joint,
    L2,
    Agem,
    AdapterCl,
    RandR,
    PerpR,
    PerpRRev,
    Esr,
}

impl StrategyKind {
    /// Row label (the comparison-table order lists strategies via
    /// [`StrategyKind::TABLE_ORDER`]).
    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::Vanilla => "Vanilla",
            StrategyKind::Joint => "Joint",
            StrategyKind::L2 => "L2",
            StrategyKind::Agem => "AGEM",
            StrategyKind::AdapterCl => "AdapterCL",
            StrategyKind::RandR => "RandR",
            StrategyKind::PerpR => "PerpR",
            StrategyKind::PerpRRev => "PerpR-Rev.",
            StrategyKind::Esr => "ESR",
        }
    }

    /// CLI / config-file spelling.
    pub fn key(&self) -> &'static str {
        match self {
            StrategyKind::Vanilla => "vanilla",
            StrategyKind::Joint => "joint",
            StrategyKind::L2 => "l2",
            StrategyKind::Agem => "agem",
            StrategyKind::AdapterCl => "adaptercl",
            StrategyKind::RandR => "randr",
            StrategyKind::PerpR => "perpr",
            StrategyKind::PerpRRev => "perpr-rev",
            StrategyKind::Esr => "esr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.key() == s.to_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }

    pub const ALL: [StrategyKind; 9] = [
        StrategyKind::Vanilla,
        StrategyKind::Joint,
        StrategyKind::L2,
        StrategyKind::Agem,
        StrategyKind::AdapterCl,
        StrategyKind::RandR,
        StrategyKind::PerpR,
        StrategyKind::PerpRRev,
        StrategyKind::Esr,
    ];

    /// Comparison-table row order.
    pub const TABLE_ORDER: [StrategyKind; 9] = [
        StrategyKind::Vanilla,
        StrategyKind::Joint,
        StrategyKind::L2,
        StrategyKind::AdapterCl,
        StrategyKind::Agem,
        StrategyKind::RandR,
        StrategyKind::PerpR,
        StrategyKind::PerpRRev,
        StrategyKind::Esr,
    ];

    /// Strategies that keep a replay memory.
    pub fn uses_memory(&self) -> bool {
        matches!(
            self,
            StrategyKind::Agem
                | StrategyKind::RandR
                | StrategyKind::PerpR
                | StrategyKind::PerpRRev
                | StrategyKind::Esr
        )
    }
}

/// Full configuration of one strategy instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// L2 anchor weight.
    pub lambda_l2: f64,
    /// Weight of the memory imitation term in the composite replay loss.
    pub lambda1: f64,
    /// Weight of the stored-logit term in the composite replay loss.
    pub lambda2: f64,
    pub memory_capacity: usize,
    /// Ablation switch: keep the memory imitation term.
    pub esr_use_lm: bool,
    /// Ablation switch: keep the stored-logit term.
    pub esr_use_lesr: bool,
    /// Reverse the perplexity memory update (keep easy, drop hard).
    pub perpr_reverse: bool,
    /// Bottleneck rank of per-domain adapters.
    pub adapter_rank: usize,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            kind: StrategyKind::Vanilla,
            lambda_l2: 0.1,
            lambda1: 0.2,
            lambda2: 0.2,
            memory_capacity: 20,
            esr_use_lm: true,
            esr_use_lesr: true,
            perpr_reverse: false,
            adapter_rank: 4,
        }
    }
}

impl StrategyConfig {
    pub fn for_kind(kind: StrategyKind) -> Self {
        StrategyConfig {
            kind,
            ..StrategyConfig::default()
        }
    }

    /// Whether the perplexity update runs reversed (either through the
    /// dedicated kind or the ablation flag).
    pub fn perpr_reversed(&self) -> bool {
        self.kind == StrategyKind::PerpRRev || self.perpr_reverse
    }

    /// Effective composite-loss weights after the ablation switches.
    pub fn esr_weights(&self) -> (f64, f64) {
        (
            if self.esr_use_lm { self.lambda1 } else { 0.0 },
            if self.esr_use_lesr { self.lambda2 } else { 0.0 },
        )
    }

    pub fn validate(&self, total_domains: usize) -> Result<()> {
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 || self.lambda_l2 < 0.0 {
            return Err(Error::Config("loss weights must be nonnegative".into()));
        }
        if self.kind.uses_memory() && self.memory_capacity < total_domains {
            return Err(Error::Config(format!(
                "memory capacity {} below domain count {}: per-domain quota would be zero",
                self.memory_capacity, total_domains
            )));
        }
        if self.kind == StrategyKind::AdapterCl && self.adapter_rank == 0 {
            return Err(Error::Config("adapter rank must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trips() {
        for kind in StrategyKind::ALL {
            assert_eq!(StrategyKind::parse(kind.key()).unwrap(), kind);
        }
        assert!(StrategyKind::parse("nope").is_err());
    }

    #[test]
    fn capacity_below_domain_count_rejected() {
        let cfg = StrategyConfig {
            kind: StrategyKind::PerpR,
            memory_capacity: 5,
            ..StrategyConfig::default()
        };
        assert!(cfg.validate(10).is_err());
        assert!(cfg.validate(5).is_ok());
    }
}
