//! CSV forms of schedules, slot grids and demand lists.

use std::io::{BufRead, BufReader, Read, Write};

use super::{Demands, Schedule, SlotGrid, VehicleDemand};
use crate::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse { line, msg: e.to_string() }
}

fn io_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parse { line: 0, msg: format!("{other:?}") },
    }
}

/// One row per slot: `slot_index,t_start_s,vehicle_id,bits,switched`.
/// Unassigned slots have an empty `vehicle_id`.
pub fn write_schedule_csv<W: Write>(out: W, grid: &SlotGrid, schedule: &Schedule) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot_index", "t_start_s", "vehicle_id", "bits", "switched"]).map_err(io_err)?;
    for k in 0..schedule.assignment.len() {
        w.write_record([
            (grid.first_slot() + k as i64).to_string(),
            grid.slot_start(k).to_string(),
            schedule.assignment[k].map(|v| v.to_string()).unwrap_or_default(),
            schedule.slot_bits[k].to_string(),
            u8::from(schedule.switched[k]).to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// The ñ matrix: a `# slot_duration_s=.. first_slot=..` line, then
/// `slot_index,veh_0,..` with empty cells for non-candidates.
pub fn write_instance<W: Write>(mut out: W, grid: &SlotGrid) -> Result<()> {
    writeln!(out, "# slot_duration_s={} first_slot={}", grid.slot_duration(), grid.first_slot())?;
    let n_veh = grid.vehicles().last().map_or(0, |v| v + 1);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["slot_index".to_string()];
    header.extend((0..n_veh).map(|v| format!("veh_{v}")));
    w.write_record(&header).map_err(io_err)?;
    for k in 0..grid.len() {
        let mut rec = vec![(grid.first_slot() + k as i64).to_string()];
        rec.extend((0..n_veh).map(|v| grid.n_tilde(k, v).map(|b| b.to_string()).unwrap_or_default()));
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_instance<R: Read>(input: R) -> Result<SlotGrid> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let meta = first
        .trim()
        .strip_prefix('#')
        .ok_or(Error::Parse { line: 1, msg: "expected `# slot_duration_s=..` line".into() })?;
    let mut slot_duration = None;
    let mut first_slot = 0i64;
    for kv in meta.split_whitespace() {
        let (key, value) = kv.split_once('=').ok_or(Error::Parse { line: 1, msg: format!("bad field `{kv}`") })?;
        let bad = |e: &dyn std::fmt::Display| Error::Parse { line: 1, msg: format!("{key}: {e}") };
        match key {
            "slot_duration_s" => slot_duration = Some(value.parse::<f64>().map_err(|e| bad(&e))?),
            "first_slot" => first_slot = value.parse::<i64>().map_err(|e| bad(&e))?,
            _ => {}
        }
    }
    let slot_duration = slot_duration.ok_or(Error::Parse { line: 1, msg: "missing slot_duration_s".into() })?;

    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.get(0) != Some("slot_index") {
        return Err(Error::Parse { line: 2, msg: "first column must be slot_index".into() });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        // +1 for the metadata line consumed before the csv reader
        let line = rec.position().map_or(0, |p| p.line() as usize + 1);
        let row = rec
            .iter()
            .skip(1)
            .map(|cell| {
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>().map(Some).map_err(|e| Error::Parse { line, msg: format!("`{cell}`: {e}") })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    SlotGrid::from_matrix(slot_duration, first_slot, &rows)
}

/// `vehicle_id,demand_bits,overhead_s`.
pub fn write_demands<W: Write>(out: W, demands: &Demands) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for d in demands.iter() {
        w.serialize(d).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_demands<R: Read>(input: R) -> Result<Demands> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(input);
    let list = rdr.deserialize::<VehicleDemand>().collect::<std::result::Result<Vec<_>, _>>().map_err(csv_err)?;
    Demands::new(list)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_round_trip() {
        let g = SlotGrid::from_matrix(
            0.5,
            7,
            &[vec![Some(1.5), None], vec![Some(2.0), Some(3.25)], vec![None, Some(0.0)]],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_instance(&mut buf, &g).unwrap();
        let back = read_instance(buf.as_slice()).unwrap();
        assert_eq!(back.slot_duration(), 0.5);
        assert_eq!(back.first_slot(), 7);
        for k in 0..3 {
            for v in 0..2 {
                assert_eq!(back.n_tilde(k, v), g.n_tilde(k, v));
            }
        }
    }

    #[test]
    fn demands_round_trip() {
        let d = Demands::new([
            VehicleDemand { vehicle_id: 0, demand_bits: 1e12, overhead_s: 0.01 },
            VehicleDemand { vehicle_id: 2, demand_bits: 5e11, overhead_s: 0.0 },
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_demands(&mut buf, &d).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("vehicle_id,demand_bits,overhead_s\n"));
        let back = read_demands(buf.as_slice()).unwrap();
        assert_eq!(back.get(2), d.get(2));
        assert!(back.get(1).is_none());
    }

    #[test]
    fn bad_cell_reports_line() {
        let text = "# slot_duration_s=1\nslot_index,veh_0\n0,1\n1,abc\n";
        match read_instance(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schedule_csv_columns() {
        let g = SlotGrid::from_matrix(2.0, 3, &[vec![Some(4.0)], vec![Some(4.0)]]).unwrap();
        let d = Demands::uniform(1, 100.0, 0.0).unwrap();
        let s = super::super::evaluate_assignment(&g.bit_table(&d).unwrap(), &d, &[Some(0), Some(0)]).unwrap();
        let mut buf = Vec::new();
        write_schedule_csv(&mut buf, &g, &s).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "slot_index,t_start_s,vehicle_id,bits,switched\n3,6,0,4,1\n4,8,0,4,0\n"
        );
    }
}
