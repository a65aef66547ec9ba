use crate::graph::SocialGraph;
use crate::error::Result;
use crate::model::{IdeologicalGroup, OpinionSnapshot};
use crate::table::MetricTable;

/// Label of the null-model row.
pub const NULL_ROW: &str = "null";

fn degree_labels(edges: &[usize]) -> Vec<String> {
    let mut labels = Vec::with_capacity(edges.len() + 1);
    let mut lo = 1usize;
    for &e in edges {
        labels.push(format!("[{lo},{e})"));
        lo = e;
    }
    labels.push(if edges.is_empty() { "all".to_string() } else { format!("[{lo},inf)") });
    labels
}

/// Average ideological composition of neighborhoods, per group of the focal
/// agent and optionally per degree stratum, followed by the null-model row
/// (global group shares) for each stratum.
///
/// `degree_strata` are ascending inner edges: `[5, 25]` gives strata
/// `[1,5)`, `[5,25)` and `[25,inf)`.
pub fn homophily_table(
    graph: &SocialGraph,
    snapshot: &OpinionSnapshot,
    degree_strata: &[usize],
    support_floor: u64,
) -> Result<MetricTable> {
    snapshot.check_matches(graph)?;
    let labels = degree_labels(degree_strata);
    let x = snapshot.opinions();
    // [stratum][group] -> (fraction sums, agents)
    let mut sums = vec![[[0.0f64; 5]; 5]; labels.len()];
    let mut agents = vec![[0u64; 5]; labels.len()];
    for i in 0..graph.len() as u32 {
        let nbrs = graph.neighbors(i);
        if nbrs.is_empty() {
            continue;
        }
        let s = degree_strata.iter().take_while(|&&e| nbrs.len() >= e).count();
        let g = IdeologicalGroup::of(x[i as usize]).index();
        let mut comp = [0u32; 5];
        for &j in nbrs {
            comp[IdeologicalGroup::of(x[j as usize]).index()] += 1;
        }
        let d = nbrs.len() as f64;
        for k in 0..5 {
            sums[s][g][k] += comp[k] as f64 / d;
        }
        agents[s][g] += 1;
    }
    let pops = snapshot.group_populations();
    let n = snapshot.len() as f64;
    let null: Vec<f64> = pops.iter().map(|&p| p as f64 / n).collect();

    let mut table = MetricTable::new(
        "homophily",
        &["degree_stratum", "group"],
        &["frac_SL", "frac_L", "frac_M", "frac_C", "frac_SC"],
        &["n_agents"],
        false,
        support_floor,
    );
    for (s, label) in labels.iter().enumerate() {
        for g in IdeologicalGroup::ALL {
            let k = agents[s][g.index()];
            let values = sums[s][g.index()]
                .iter()
                .map(|&v| if k == 0 { f64::NAN } else { v / k as f64 })
                .collect();
            table.push(vec![label.clone(), g.label().into()], None, values, vec![k], k);
        }
        table.push(vec![label.clone(), NULL_ROW.into()], None, null.clone(), vec![snapshot.len() as u64], snapshot.len() as u64);
    }
    Ok(table)
}
