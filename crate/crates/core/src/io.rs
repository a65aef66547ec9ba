//! Reading and writing snapshots and edge lists, and assembling them into a
//! [`Dataset`] restricted to the giant connected component.
//!
//! Canonical files are UTF-8 CSV: snapshots carry the header
//! `agent_id,opinion`, edge lists `src,dst` with one undirected edge per
//! line in either orientation.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::model::OpinionSnapshot;

pub const SNAPSHOT_HEADER: &str = "agent_id,opinion";
pub const EDGES_HEADER: &str = "src,dst";
pub const EDGES_FILE: &str = "edges.csv";

/// One parsed data line and its 1-based line number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry<T> {
    pub line: usize,
    pub value: T,
}

/// A snapshot file after parsing, before agent ids are resolved.
#[derive(Debug, Clone)]
pub struct RawSnapshot {
    pub path: PathBuf,
    pub rows: Vec<Entry<(u64, f64)>>,
}

#[derive(Debug, Clone)]
pub struct RawEdges {
    pub path: PathBuf,
    pub rows: Vec<Entry<(u64, u64)>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub agents_read: usize,
    pub edges_read: usize,
    pub self_loops: usize,
    pub duplicate_edges: usize,
    pub components: usize,
    pub outside_giant_component: usize,
    pub agents_retained: usize,
    pub edges_retained: usize,
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} agents read, {} agents outside giant component, {} agents and {} edges retained",
            self.agents_read, self.outside_giant_component, self.agents_retained, self.edges_retained
        )
    }
}

/// Snapshots over one graph, agents densely numbered.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: SocialGraph,
    pub snapshots: Vec<OpinionSnapshot>,
    /// External id of each dense agent id, ascending.
    pub external_ids: Vec<u64>,
    pub report: IngestReport,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn malformed(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::MalformedLine {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Splits a data line into fields on commas, tabs or runs of spaces.
fn fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

fn parse_u64(path: &Path, line: usize, s: &str) -> Result<u64> {
    s.parse::<u64>()
        .map_err(|_| malformed(path, line, format!("'{s}' is not a non-negative integer id")))
}

/// Parses every non-empty line after the header in parallel; on failure
/// the error for the earliest offending line is returned.
fn parse_lines<T, F>(text: &str, skip_header: bool, parse: F) -> Result<Vec<Entry<T>>>
where
    T: Send,
    F: Fn(usize, &str) -> Result<T> + Sync,
{
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .skip(usize::from(skip_header))
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let parsed: Vec<Result<Entry<T>>> = lines
        .par_iter()
        .map(|&(line, l)| parse(line, l).map(|value| Entry { line, value }))
        .collect();
    parsed.into_iter().collect()
}

fn check_header(path: &Path, text: &str, expected: &str) -> Result<()> {
    let first = text.lines().next().unwrap_or("").trim_end_matches('\r');
    let got: Vec<&str> = first.split(',').map(str::trim).collect();
    let want: Vec<&str> = expected.split(',').collect();
    if got != want {
        return Err(malformed(path, 1, format!("expected header '{expected}', found '{first}'")));
    }
    Ok(())
}

fn parse_opinion(path: &Path, line: usize, agent: u64, s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| malformed(path, line, format!("'{s}' is not a number")))?;
    if v.is_nan() {
        return Err(malformed(path, line, "opinion is NaN"));
    }
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OpinionOutOfRangeInFile {
            path: path.to_path_buf(),
            line,
            agent,
            value: v,
        });
    }
    Ok(v)
}

pub fn read_snapshot_csv(path: &Path) -> Result<RawSnapshot> {
    let text = read_text(path)?;
    check_header(path, &text, SNAPSHOT_HEADER)?;
    let rows = parse_lines(&text, true, |line, l| {
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        if f.len() != 2 {
            return Err(malformed(path, line, format!("expected 2 fields, found {}", f.len())));
        }
        let agent = parse_u64(path, line, f[0])?;
        Ok((agent, parse_opinion(path, line, agent, f[1])?))
    })?;
    Ok(RawSnapshot {
        path: path.to_path_buf(),
        rows,
    })
}

pub fn read_edges_csv(path: &Path) -> Result<RawEdges> {
    let text = read_text(path)?;
    check_header(path, &text, EDGES_HEADER)?;
    let rows = parse_lines(&text, true, |line, l| {
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        if f.len() != 2 {
            return Err(malformed(path, line, format!("expected 2 fields, found {}", f.len())));
        }
        Ok((parse_u64(path, line, f[0])?, parse_u64(path, line, f[1])?))
    })?;
    Ok(RawEdges {
        path: path.to_path_buf(),
        rows,
    })
}

/// Resolves ids, checks that every snapshot covers the same agents, builds
/// the graph and keeps only its largest connected component.
pub fn assemble(snapshots: Vec<RawSnapshot>, edges: RawEdges) -> Result<Dataset> {
    let first = snapshots
        .first()
        .ok_or_else(|| Error::InvalidParameter("at least one snapshot is required".into()))?;
    let mut ids: Vec<u64> = first.rows.iter().map(|e| e.value.0).collect();
    ids.par_sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        let line = first.rows.iter().filter(|e| e.value.0 == w[0]).nth(1).map_or(0, |e| e.line);
        return Err(malformed(&first.path, line, format!("agent {} listed twice", w[0])));
    }
    let n = ids.len();
    let dense = |x: u64| ids.binary_search(&x).ok();

    let mut values = Vec::with_capacity(snapshots.len());
    for snap in &snapshots {
        let mut x = vec![f64::NAN; n];
        for e in &snap.rows {
            let (agent, v) = e.value;
            let Some(i) = dense(agent) else {
                return Err(Error::SnapshotAgentMismatch {
                    path: snap.path.clone(),
                    detail: format!("line {}: agent {agent} not in the first snapshot", e.line),
                });
            };
            if !x[i].is_nan() {
                return Err(malformed(&snap.path, e.line, format!("agent {agent} listed twice")));
            }
            x[i] = v;
        }
        if let Some(i) = x.iter().position(|v| v.is_nan()) {
            return Err(Error::SnapshotAgentMismatch {
                path: snap.path.clone(),
                detail: format!("agent {} missing", ids[i]),
            });
        }
        values.push(x);
    }

    let mut pairs = Vec::with_capacity(edges.rows.len());
    for e in &edges.rows {
        let (a, b) = e.value;
        let resolve = |x: u64| {
            dense(x).ok_or_else(|| Error::DanglingEndpoint {
                path: edges.path.clone(),
                line: e.line,
                agent: x,
            })
        };
        pairs.push((resolve(a)? as u32, resolve(b)? as u32));
    }
    let (full, stats) = SocialGraph::build(n, pairs)?;
    let labels = full.component_labels();
    let components = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let keep = full.largest_component();
    let (graph, old) = full.induced_subgraph(&keep);
    let snapshots = values
        .iter()
        .enumerate()
        .map(|(k, x)| OpinionSnapshot::new(k as u32 + 1, old.iter().map(|&i| x[i as usize]).collect()))
        .collect::<Result<Vec<_>>>()?;
    let report = IngestReport {
        agents_read: n,
        edges_read: stats.input_edges,
        self_loops: stats.self_loops,
        duplicate_edges: stats.duplicates,
        components,
        outside_giant_component: n - old.len(),
        agents_retained: old.len(),
        edges_retained: graph.edge_count(),
    };
    Ok(Dataset {
        external_ids: old.iter().map(|&i| ids[i as usize]).collect(),
        graph,
        snapshots,
        report,
    })
}

/// Ingests canonical snapshot files (in time order) and an edge list.
pub fn ingest(snapshot_paths: &[PathBuf], edges_path: &Path) -> Result<Dataset> {
    let snapshots = snapshot_paths
        .par_iter()
        .map(|p| read_snapshot_csv(p))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let edges = read_edges_csv(edges_path)?;
    assemble(snapshots, edges)
}

/// `snapshot_<k>.csv` files in `dir`, ordered by `k`.
pub fn snapshot_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("");
        if let Some(k) = name
            .strip_prefix("snapshot_")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<u32>().ok())
        {
            found.push((k, path));
        }
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

/// Ingests a directory holding `snapshot_<k>.csv` files and `edges.csv`.
pub fn ingest_dir(dir: &Path) -> Result<Dataset> {
    let snaps = snapshot_files(dir)?;
    if snaps.is_empty() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no snapshot_<k>.csv files"),
        ));
    }
    ingest(&snaps, &dir.join(EDGES_FILE))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

fn finish(path: &Path, mut w: BufWriter<fs::File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a snapshot; `ids` maps dense ids to the ids written (identity if
/// `None`). Opinions use the shortest representation that parses back to
/// the same value.
pub fn write_snapshot_csv(path: &Path, snapshot: &OpinionSnapshot, ids: Option<&[u64]>) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{SNAPSHOT_HEADER}").map_err(io)?;
    for (i, x) in snapshot.opinions().iter().enumerate() {
        let id = ids.map_or(i as u64, |m| m[i]);
        writeln!(w, "{id},{x}").map_err(io)?;
    }
    finish(path, w)
}

/// Writes each undirected edge once as `low,high` in dense-id order.
pub fn write_edges_csv(path: &Path, graph: &SocialGraph, ids: Option<&[u64]>) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{EDGES_HEADER}").map_err(io)?;
    for (a, b) in graph.edges() {
        let (a, b) = match ids {
            Some(m) => (m[a as usize], m[b as usize]),
            None => (a as u64, b as u64),
        };
        writeln!(w, "{a},{b}").map_err(io)?;
    }
    finish(path, w)
}

/// Writes `snapshot_<t>.csv` per snapshot and `edges.csv` into `dir`, using
/// the external ids.
pub fn export_dataset(dir: &Path, data: &Dataset) -> Result<()> {
    for s in &data.snapshots {
        write_snapshot_csv(
            &dir.join(format!("snapshot_{}.csv", s.time_index())),
            s,
            Some(&data.external_ids),
        )?;
    }
    write_edges_csv(&dir.join(EDGES_FILE), &data.graph, Some(&data.external_ids))
}

/// Adapter for archive-style layouts: one wide opinion table (an id column
/// followed by one opinion column per wave, optional header, comma, tab or
/// space separated) and a two-column edge list in the same style.
pub mod archive {
    use super::*;

    fn has_header(line: &str) -> bool {
        fields(line)
            .first()
            .is_some_and(|f| f.parse::<u64>().is_err())
    }

    /// Splits a wide opinion table into one raw snapshot per wave column.
    pub fn read_wide_opinions(path: &Path) -> Result<Vec<RawSnapshot>> {
        let text = read_text(path)?;
        let header = text.lines().next().is_some_and(has_header);
        let rows = parse_lines(&text, header, |line, l| {
            let f = fields(l);
            if f.len() < 2 {
                return Err(malformed(path, line, "expected an id and at least one opinion"));
            }
            let agent = parse_u64(path, line, f[0])?;
            let x = f[1..]
                .iter()
                .map(|s| parse_opinion(path, line, agent, s))
                .collect::<Result<Vec<_>>>()?;
            Ok((agent, x))
        })?;
        let waves = rows.first().map_or(0, |e| e.value.1.len());
        if let Some(e) = rows.iter().find(|e| e.value.1.len() != waves) {
            return Err(malformed(
                path,
                e.line,
                format!("expected {waves} opinion columns, found {}", e.value.1.len()),
            ));
        }
        Ok((0..waves)
            .map(|k| RawSnapshot {
                path: path.to_path_buf(),
                rows: rows
                    .iter()
                    .map(|e| Entry {
                        line: e.line,
                        value: (e.value.0, e.value.1[k]),
                    })
                    .collect(),
            })
            .collect())
    }

    pub fn read_edge_pairs(path: &Path) -> Result<RawEdges> {
        let text = read_text(path)?;
        let header = text.lines().next().is_some_and(has_header);
        let rows = parse_lines(&text, header, |line, l| {
            let f = fields(l);
            if f.len() < 2 {
                return Err(malformed(path, line, "expected two endpoint ids"));
            }
            Ok((parse_u64(path, line, f[0])?, parse_u64(path, line, f[1])?))
        })?;
        Ok(RawEdges {
            path: path.to_path_buf(),
            rows,
        })
    }

    pub fn import(opinions: &Path, edges: &Path) -> Result<Dataset> {
        assemble(read_wide_opinions(opinions)?, read_edge_pairs(edges)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn triangle() {
        let d = tempfile::tempdir().unwrap();
        let s = write(d.path(), "s1.csv", "agent_id,opinion\n10,0.1\n20,0.5\n30,0.9\n");
        let e = write(d.path(), "e.csv", "src,dst\n10,20\n30,20\n10,30\n");
        let ds = ingest(&[s], &e).unwrap();
        assert_eq!(ds.graph.len(), 3);
        assert_eq!(ds.graph.edge_count(), 3);
        assert_eq!(ds.external_ids, vec![10, 20, 30]);
        assert_eq!(ds.snapshots[0].opinions(), &[0.1, 0.5, 0.9]);
        assert_eq!(ds.snapshots[0].time_index(), 1);
    }

    #[test]
    fn dyad_outside_giant_component() {
        let d = tempfile::tempdir().unwrap();
        let s = write(d.path(), "s.csv", "agent_id,opinion\n1,0.1\n2,0.2\n3,0.3\n4,0.4\n5,0.5\n");
        let e = write(d.path(), "e.csv", "src,dst\n1,2\n2,3\n3,1\n4,5\n");
        let ds = ingest(&[s], &e).unwrap();
        assert_eq!(ds.report.outside_giant_component, 2);
        assert_eq!(ds.report.components, 2);
        assert!(ds.report.to_string().contains("2 agents outside giant component"));
        assert_eq!(ds.external_ids, vec![1, 2, 3]);
        assert!(ds.graph.is_connected());
    }

    #[test]
    fn distinct_errors() {
        let d = tempfile::tempdir().unwrap();
        let good = write(d.path(), "g.csv", "agent_id,opinion\n1,0.1\n2,0.2\n");
        let edges = write(d.path(), "e.csv", "src,dst\n1,2\n");

        let bad = write(d.path(), "b.csv", "agent_id,opinion\n1,0.1\n2,zero\n");
        match ingest(&[bad], &edges) {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let range = write(d.path(), "r.csv", "agent_id,opinion\n1,0.1\n2,1.5\n");
        match ingest(&[range], &edges) {
            Err(Error::OpinionOutOfRangeInFile { line, agent, value, .. }) => {
                assert_eq!((line, agent, value), (3, 2, 1.5))
            }
            other => panic!("{other:?}"),
        }
        let dangling = write(d.path(), "d.csv", "src,dst\n1,2\n2,7\n");
        match ingest(&[good.clone()], &dangling) {
            Err(Error::DanglingEndpoint { line, agent, .. }) => assert_eq!((line, agent), (3, 7)),
            other => panic!("{other:?}"),
        }
        let other = write(d.path(), "o.csv", "agent_id,opinion\n1,0.1\n3,0.2\n");
        assert!(matches!(ingest(&[good.clone(), other], &edges), Err(Error::SnapshotAgentMismatch { .. })));
        let header = write(d.path(), "h.csv", "id,x\n1,0.1\n");
        assert!(matches!(ingest(&[header], &edges), Err(Error::MalformedLine { line: 1, .. })));
        assert!(matches!(
            ingest(&[d.path().join("missing.csv")], &edges),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn earliest_bad_line_is_reported() {
        let d = tempfile::tempdir().unwrap();
        let mut body = String::from("agent_id,opinion\n");
        for i in 0..5000 {
            body.push_str(&format!("{i},0.5\n"));
        }
        body.push_str("x,0.5\n5001,nope\n");
        let p = write(d.path(), "s.csv", &body);
        match read_snapshot_csv(&p) {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 5002),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        let d = tempfile::tempdir().unwrap();
        let s1 = write(d.path(), "a.csv", "agent_id,opinion\n7,0.1\n3,0.30000000000000004\n9,1\n5,0\n");
        let s2 = write(d.path(), "b.csv", "agent_id,opinion\n9,0.25\n5,0.125\n3,0.7\n7,0.123456789\n");
        let e = write(d.path(), "e.csv", "src,dst\n7,3\n3,9\n9,5\n5,5\n3,7\n");
        let a = ingest(&[s1, s2], &e).unwrap();
        let out = d.path().join("out");
        export_dataset(&out, &a).unwrap();
        let b = ingest_dir(&out).unwrap();
        assert_eq!(a.external_ids, b.external_ids);
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.snapshots, b.snapshots);
        assert_eq!(a.report.self_loops, 1);
        assert_eq!(a.report.duplicate_edges, 1);
    }

    #[test]
    fn wide_archive_layout() {
        let d = tempfile::tempdir().unwrap();
        let o = write(d.path(), "op.tsv", "user\tw1\tw2\tw3\n1\t0.1\t0.2\t0.3\n2\t0.5\t0.5\t0.5\n3\t0.9\t0.8\t0.7\n");
        let e = write(d.path(), "fr.txt", "1 2\n2 3\n");
        let ds = archive::import(&o, &e).unwrap();
        assert_eq!(ds.snapshots.len(), 3);
        assert_eq!(ds.snapshots[2].opinions(), &[0.3, 0.5, 0.7]);
        assert_eq!(ds.graph.edge_count(), 2);
    }
}
