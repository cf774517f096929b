use std::io::Write;

use crate::error::Result;
use crate::kernel::TimeGrid;
use crate::paths::PathField;

/// Wide CSV: one row per `(path, node)` with `path, node, t` and then every
/// coordinate of every field, headed `name[idx]`.
pub fn write_paths_csv(
    mut out: impl Write,
    grid: &TimeGrid,
    fields: &[(&str, &PathField)],
) -> Result<()> {
    let mut header = vec!["path".to_string(), "node".to_string(), "t".to_string()];
    for (name, field) in fields {
        if field.width() == 1 {
            header.push((*name).to_string());
        } else {
            header.extend((0..field.width()).map(|c| format!("{name}[{c}]")));
        }
    }
    writeln!(out, "{}", header.join(","))?;
    let Some((_, first)) = fields.first() else {
        return Ok(());
    };
    let mut line = String::new();
    for p in 0..first.paths() {
        for i in 0..first.nodes() {
            line.clear();
            line.push_str(&format!("{p},{i},{}", grid.t(i)));
            for (_, field) in fields {
                for x in field.get(i, p) {
                    line.push(',');
                    line.push_str(&format!("{x:e}"));
                }
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}
