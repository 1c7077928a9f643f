//! File writers. Floats are printed with six decimals; flags as 0/1.

use super::HarnessError;
use crate::criticality::{ParamSpace, UnitPoint};
use crate::search::{cumulative_curve, EvalRecord};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const RUN_HEADER: &str = "idx,u0,u1,t_amb_c,i_max_a,kappa,critical,node_h,node_i,instance_id";
pub const CURVE_HEADER: &str = "n,critical_cumulative";

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    File::create(path).map(BufWriter::new).map_err(|e| HarnessError::io(path, e))
}

pub(crate) fn physical(space: &ParamSpace, u: &UnitPoint) -> Vec<f64> {
    space.denormalize(u).map(|p| p.0).unwrap_or_default()
}

fn write_run<W: Write>(mut out: W, trace: &[EvalRecord], space: &ParamSpace) -> std::io::Result<()> {
    writeln!(out, "{RUN_HEADER}")?;
    for r in trace {
        let x = physical(space, &r.point);
        let (h, i) = r.node.map_or((String::new(), String::new()), |n| (n.depth.to_string(), n.index.to_string()));
        let inst = r.instance_id.map(|j| j.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{},{}",
            r.index,
            r.point.0[0],
            r.point.0[1],
            x[0],
            x[1],
            r.kappa,
            u8::from(r.critical),
            h,
            i,
            inst
        )?;
    }
    out.flush()
}

pub fn write_run_csv(path: &Path, trace: &[EvalRecord], space: &ParamSpace) -> Result<(), HarnessError> {
    write_run(create(path)?, trace, space).map_err(|e| HarnessError::io(path, e))
}

pub fn write_curve_csv(path: &Path, trace: &[EvalRecord]) -> Result<(), HarnessError> {
    let mut out = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "{CURVE_HEADER}")?;
        for (n, c) in cumulative_curve(trace) {
            writeln!(out, "{n},{c}")?;
        }
        out.flush()
    };
    write().map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| HarnessError::io(path, std::io::Error::other(e)))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::NodeId;

    #[test]
    fn run_csv_rows() {
        let trace = vec![
            EvalRecord {
                index: 1,
                point: UnitPoint(vec![0.5, 0.5]),
                kappa: 0.25,
                critical: false,
                node: None,
                instance_id: None,
            },
            EvalRecord {
                index: 2,
                point: UnitPoint(vec![1.0, 0.0]),
                kappa: 0.8,
                critical: true,
                node: Some(NodeId { depth: 3, index: 5 }),
                instance_id: Some(2),
            },
        ];
        let mut buf = Vec::new();
        write_run(&mut buf, &trace, &ParamSpace::default()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], RUN_HEADER);
        assert_eq!(lines[1], "1,0.500000,0.500000,17.500000,55.000000,0.250000,0,,,");
        assert_eq!(lines[2], "2,1.000000,0.000000,40.000000,10.000000,0.800000,1,3,5,2");
    }
}
