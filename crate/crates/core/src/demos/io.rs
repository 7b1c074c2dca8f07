//! JSON-lines demonstration files: one header line, then one trajectory per
//! line. Censored files omit `uo`, `ueps` and `r`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{DemonstrationSet, Trajectory};
use crate::envs::{EnvSpec, StepRecord};
use crate::{Error, Result};

pub const FORMAT: &str = "cil-demos";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    censored: bool,
    env_spec: EnvSpec,
}

#[derive(Serialize, Deserialize)]
struct StepLine {
    s: Vec<f64>,
    a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    uo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ueps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryLine {
    episode_seed: u64,
    steps: Vec<StepLine>,
}

pub fn write_jsonl<W: Write>(demos: &DemonstrationSet, mut out: W) -> Result<()> {
    let header = Header {
        format: FORMAT.into(),
        version: FORMAT_VERSION,
        censored: demos.is_censored(),
        env_spec: demos.env_spec().clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    let hidden = !demos.is_censored();
    for tr in demos.raw() {
        let line = TrajectoryLine {
            episode_seed: tr.episode_seed,
            steps: tr
                .steps
                .iter()
                .map(|s| StepLine {
                    s: s.s.clone(),
                    a: s.a.clone(),
                    uo: hidden.then_some(s.uo),
                    ueps: hidden.then_some(s.ueps),
                    r: hidden.then_some(s.r),
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<DemonstrationSet> {
    let mut lines = input.lines();
    let header: Header = match lines.next() {
        Some(l) => serde_json::from_str(&l?)?,
        None => return Err(Error::Format("empty demonstration file".into())),
    };
    if header.format != FORMAT || header.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported demonstration format {} v{}",
            header.format, header.version
        )));
    }
    let mut trajectories = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tl: TrajectoryLine = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("trajectory line {}: {e}", n + 1)))?;
        let mut steps = Vec::with_capacity(tl.steps.len());
        for (j, s) in tl.steps.into_iter().enumerate() {
            let hidden = |v: Option<f64>, name: &str| -> Result<f64> {
                match (header.censored, v) {
                    (true, _) => Ok(f64::NAN),
                    (false, Some(x)) => Ok(x),
                    (false, None) => Err(Error::Format(format!(
                        "trajectory line {}, step {}: missing `{name}`",
                        n + 1,
                        j + 1
                    ))),
                }
            };
            steps.push(StepRecord {
                t: j + 1,
                uo: hidden(s.uo, "uo")?,
                ueps: hidden(s.ueps, "ueps")?,
                r: hidden(s.r, "r")?,
                s: s.s,
                a: s.a,
            });
        }
        trajectories.push(Trajectory {
            episode_seed: tl.episode_seed,
            steps,
        });
    }
    DemonstrationSet::from_raw(header.env_spec, trajectories, header.censored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demos::generate_demonstrations;

    #[test]
    fn round_trip_full_and_censored() {
        let d = generate_demonstrations(&EnvSpec::plane_ticket(2, 20), 3, 20, 8).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&d, &mut buf).unwrap();
        let back = read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, d);

        let mut buf = Vec::new();
        write_jsonl(&d.censored(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let body = text.lines().nth(1).unwrap();
        assert!(!body.contains("uo") && !body.contains("ueps") && !body.contains("\"r\""));
        let back = read_jsonl(&buf[..]).unwrap();
        assert!(back.is_censored());
        assert!(back.uo(0, 0).is_err());
        assert_eq!(back.state(2, 7), d.state(2, 7));
    }

    #[test]
    fn rejects_missing_hidden_field() {
        let text = format!(
            "{{\"format\":\"{FORMAT}\",\"version\":1,\"censored\":false,\"env_spec\":{{\"env\":\"plane_ticket\",\"k\":1,\"T\":1}}}}\n{{\"episode_seed\":0,\"steps\":[{{\"s\":[0.1],\"a\":[0.2]}}]}}\n"
        );
        let err = read_jsonl(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("missing `uo`"), "{err}");
    }
}
