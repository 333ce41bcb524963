use std::io::Write;

use crate::error::Result;
use crate::psys::SurfaceParams;
use crate::report::sig17;

use super::Trajectory;

/// CSV with columns `t,x,y,z,region,H`.
pub fn write_trajectory_csv(out: impl Write, traj: &Trajectory, surface: &SurfaceParams) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| crate::Error::Config(format!("writing trajectory: {e}"));
    w.write_record(["t", "x", "y", "z", "region", "H"]).map_err(io)?;
    for s in &traj.samples {
        let st = s.state;
        w.write_record([
            sig17(s.t),
            sig17(st.x),
            sig17(st.y),
            sig17(st.z),
            s.mode.label().to_string(),
            sig17(surface.eval(st.y, st.z)),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| crate::Error::Config(format!("writing trajectory: {e}")))?;
    Ok(())
}

/// CSV with columns `t,x,y,z,kind`.
pub fn write_events_csv(out: impl Write, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| crate::Error::Config(format!("writing events: {e}"));
    w.write_record(["t", "x", "y", "z", "kind"]).map_err(io)?;
    for e in &traj.events {
        let st = e.state;
        w.write_record([sig17(e.t), sig17(st.x), sig17(st.y), sig17(st.z), e.kind.label().to_string()])
            .map_err(io)?;
    }
    w.flush().map_err(|e| crate::Error::Config(format!("writing events: {e}")))?;
    Ok(())
}
