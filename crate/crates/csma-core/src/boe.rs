//! Quick airtime-share estimate from maximum-independent-set counting.
//!
//! The estimate gives link `i` the fraction `n_i / n`, where `n` is the
//! number of maximum independent sets of the contention graph and `n_i`
//! counts those containing `i`. Multiplying by the throughput of a single
//! saturated link converts the share to bits per second.

use crate::error::Result;
use crate::graph::ContentionGraph;
use crate::throughput::ThroughputVector;

/// Normalized throughput from maximum-independent-set counting.
pub fn boe_throughput(graph: &ContentionGraph) -> Result<ThroughputVector> {
    let mis = graph.maximum_independent_sets()?;
    let n = mis.len() as f64;
    let values = (0..graph.len())
        .map(|i| mis.iter().filter(|s| s.get(i)).count() as f64 / n)
        .collect();
    Ok(ThroughputVector::new(values))
}

/// A named throughput for a single saturated link, used to scale
/// normalized shares to bits per second.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePreset {
    pub name: String,
    pub single_link_bps: f64,
}

impl RatePreset {
    pub fn new(name: impl Into<String>, single_link_bps: f64) -> Self {
        assert!(
            single_link_bps.is_finite() && single_link_bps > 0.0,
            "single-link rate must be positive"
        );
        Self {
            name: name.into(),
            single_link_bps,
        }
    }

    /// Built-in presets. The values are measured single-link throughputs
    /// treated as opaque constants.
    pub fn builtins() -> Vec<RatePreset> {
        vec![
            RatePreset::new("802.11b-udp", 6.06e6),
            RatePreset::new("802.11a-udp", 30.91e6),
            RatePreset::new("802.11b-tcp", 4.84e6),
        ]
    }

    pub fn by_name(name: &str) -> Option<RatePreset> {
        Self::builtins().into_iter().find(|p| p.name == name)
    }
}

/// Converts normalized throughputs to bits per second.
pub fn to_bps(tv: &ThroughputVector, preset: &RatePreset) -> Vec<f64> {
    tv.values()
        .iter()
        .map(|v| v * preset.single_link_bps)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ContentionGraph;

    #[test]
    fn fig_graph_share() {
        let g = ContentionGraph::new(vec!["1", "2", "3", "4"], &[(0, 1), (1, 2), (1, 3), (2, 3)])
            .unwrap();
        let tv = boe_throughput(&g).unwrap();
        assert_eq!(tv.values(), &[1.0, 0.0, 0.5, 0.5]);
    }

    #[test]
    fn single_vertex_share_is_one() {
        let g = ContentionGraph::new(vec!["x"], &[]).unwrap();
        assert_eq!(boe_throughput(&g).unwrap().values(), &[1.0]);
    }

    #[test]
    fn bps_conversion() {
        let b_udp = RatePreset::by_name("802.11b-udp").unwrap();
        assert_eq!(
            to_bps(&ThroughputVector::new(vec![0.5]), &b_udp),
            vec![3.03e6]
        );

        let a_udp = RatePreset::by_name("802.11a-udp").unwrap();
        assert_eq!(
            to_bps(&ThroughputVector::new(vec![1.0, 0.0]), &a_udp),
            vec![30.91e6, 0.0]
        );

        let b_tcp = RatePreset::by_name("802.11b-tcp").unwrap();
        assert_eq!(
            to_bps(&ThroughputVector::new(vec![0.4]), &b_tcp),
            vec![1.936e6]
        );
    }
}
