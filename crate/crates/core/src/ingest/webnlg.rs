use roxmltree::{Document, Node};

use super::IngestError;
use crate::model::{DataPoint, Dataset, ProvenanceRecord, Split, Triple, TripleSet};

/// Parses a WebNLG benchmark file.
///
/// Each `<entry>` yields one data point per `<lex>` element, all sharing the
/// entry's `<modifiedtripleset>`. Ids are `<eid>#<lex position>` with the
/// position counted from zero.
pub fn parse_webnlg_xml(xml: &str, name: &str, split: Split) -> Result<Dataset, IngestError> {
    let doc = Document::parse(xml).map_err(|e| IngestError::MalformedXml(e.to_string()))?;
    let mut points = Vec::new();

    for (entry_index, entry) in doc
        .descendants()
        .filter(|n| n.has_tag_name("entry"))
        .enumerate()
    {
        let entry_id = entry
            .attribute("eid")
            .map(str::to_owned)
            .unwrap_or_else(|| format!("entry{}", entry_index + 1));
        let triples = entry_triples(entry, &entry_id)?;

        let lexicalizations = entry
            .children()
            .filter(|n| n.has_tag_name("lex"))
            .map(lex_text);
        for (lex_index, text) in lexicalizations.enumerate() {
            let id = format!("{entry_id}#{lex_index}");
            points.push(DataPoint::new(id, text.trim(), triples.clone())?);
        }
    }

    let mut dataset = Dataset::new(name, split, points)?;
    dataset.record(ProvenanceRecord::new("ingest:webnlg-xml", None, name));
    Ok(dataset)
}

fn entry_triples(entry: Node<'_, '_>, entry_id: &str) -> Result<TripleSet, IngestError> {
    let mut triples = TripleSet::new();
    let Some(set) = entry
        .children()
        .find(|n| n.has_tag_name("modifiedtripleset"))
    else {
        return Ok(triples);
    };
    for mtriple in set.children().filter(|n| n.has_tag_name("mtriple")) {
        let raw = mtriple.text().unwrap_or_default();
        triples.insert(parse_triple(raw, entry_id)?);
    }
    Ok(triples)
}

fn parse_triple(raw: &str, entry_id: &str) -> Result<Triple, IngestError> {
    let err = || IngestError::TripleParseError {
        entry: entry_id.to_owned(),
        raw: raw.to_owned(),
    };
    let parts: Vec<&str> = raw.trim().split(" | ").collect();
    let [head, relation, tail] = parts.as_slice() else {
        return Err(err());
    };
    Triple::new(head, relation, tail).map_err(|_| err())
}

// Older releases nest the sentence in <text>; v3 puts it directly in <lex>.
fn lex_text(lex: Node<'_, '_>) -> String {
    if let Some(text) = lex.children().find(|n| n.has_tag_name("text")) {
        return text.text().unwrap_or_default().to_owned();
    }
    lex.children()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect::<String>()
}
