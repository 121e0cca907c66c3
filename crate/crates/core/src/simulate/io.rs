use super::{Event, SimError, Trace};

fn number(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with a `t_s,<state>_A,...` header and `# event,...` trailer lines.
pub fn write_csv(trace: &Trace) -> String {
    let mut out = String::from("t_s");
    for s in &trace.states {
        out.push_str(&format!(",{s}_A"));
    }
    out.push('\n');
    for (i, t) in trace.times.iter().enumerate() {
        out.push_str(&number(*t));
        for series in &trace.values {
            out.push(',');
            out.push_str(&number(series[i]));
        }
        out.push('\n');
    }
    for e in &trace.events {
        let detail = e.detail.replace([',', '\n', '\r'], ";");
        out.push_str(&format!("# event,{},{},{detail}\n", number(e.time), e.kind));
    }
    out
}

pub fn read_csv(text: &str) -> Result<Trace, SimError> {
    let err = |m: String| SimError::TraceFormat(m);
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| err(e.to_string()))?.clone();
    if headers.get(0) != Some("t_s") {
        return Err(err("first column must be `t_s`".into()));
    }
    let mut states = Vec::new();
    for h in headers.iter().skip(1) {
        let name = h
            .strip_suffix("_A")
            .ok_or_else(|| err(format!("column `{h}` lacks the `_A` suffix")))?;
        states.push(name.to_string());
    }
    let mut trace = Trace::new(states);
    let mut row = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| err(e.to_string()))?;
        row.clear();
        for field in record.iter() {
            row.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| err(format!("row {}: bad number `{field}`", line + 1)))?,
            );
        }
        trace.record(row[0], &row[1..]);
    }
    for line in text.lines() {
        let Some(rest) = line.strip_prefix("# event,") else {
            continue;
        };
        let mut parts = rest.splitn(3, ',');
        let (Some(t), Some(kind), detail) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err(format!("malformed event line `{line}`")));
        };
        trace.events.push(Event {
            time: t
                .parse()
                .map_err(|_| err(format!("bad event time `{t}`")))?,
            kind: kind.parse()?,
            detail: detail.unwrap_or("").to_string(),
        });
    }
    Ok(trace)
}
