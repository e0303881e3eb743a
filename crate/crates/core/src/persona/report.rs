use std::fmt::Write;

use crate::dataset::Dimension;
use crate::error::Result;

use super::describe::describe;
use super::merge::ProtoPersona;

/// Markdown report, one section per proto-persona. Goals are left for the
/// designer to write.
pub fn markdown_report(protos: &[ProtoPersona], labels: &[Dimension]) -> Result<String> {
    let mut out = String::from("# Proto-personas\n");
    if protos.is_empty() {
        out.push_str("\nNo proto-personas have been created.\n");
        return Ok(out);
    }
    for p in protos {
        let text = describe(p, labels)?;
        let title = if p.name.trim().is_empty() {
            p.sources.join("+")
        } else {
            p.name.trim().to_string()
        };
        let _ = write!(
            out,
            "\n## {title}\n\nSource clusters: {}\n\nMembers: {}\n\n{text}\n\n",
            p.sources.join(", "),
            p.members.join(", ")
        );
        out.push_str("| Dimension | Label | Mean | Std. dev | Support | Flag |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for d in &p.dims {
            let label = labels
                .iter()
                .find(|l| l.id == d.dim)
                .map_or(d.dim.as_str(), |l| l.label.as_str());
            let _ = writeln!(
                out,
                "| {} | {} | {:.3} | {:.3} | {} | {} |",
                d.dim,
                label,
                d.mean,
                d.std_dev,
                d.support,
                if d.conflicting { "CONFLICT" } else { "" }
            );
        }
        if !p.vetoed.is_empty() {
            let _ = writeln!(out, "\nVetoed: {}", p.vetoed.join(", "));
        }
        out.push_str("\n### Goals\n\n_To be written._\n");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persona::merge::MergedDim;

    #[test]
    fn has_sections() {
        let p = ProtoPersona {
            name: "Ann".into(),
            sources: vec!["D65".into(), "J65".into()],
            members: vec!["5".into(), "6".into()],
            dims: vec![MergedDim {
                dim: "d1".into(),
                mean: 0.9,
                std_dev: 0.2,
                support: 2,
                conflicting: true,
            }],
            vetoed: vec![],
            description: String::new(),
        };
        let md = markdown_report(&[p], &[Dimension::bare("d1")]).unwrap();
        assert!(md.contains("## Ann"));
        assert!(md.contains("| d1 | d1 | 0.900 | 0.200 | 2 | CONFLICT |"));
        assert!(md.contains("### Goals"));
    }
}
