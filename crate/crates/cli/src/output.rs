use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub const BUILD: &str = env!("QCAUSAL_GIT_DESCRIBE");

/// A CSV writer whose first line is a `#` comment recording the command,
/// its parameters and the build.
pub fn csv_writer(out: Option<&Path>, command: &str, params: &str) -> anyhow::Result<csv::Writer<Box<dyn Write>>> {
    let mut sink: Box<dyn Write> = match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    writeln!(sink, "# qcausal {command} build={BUILD} {params}")?;
    Ok(csv::Writer::from_writer(sink))
}

pub fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn flag(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}
