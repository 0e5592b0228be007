//! Flow-record CSV input.

use std::io::Read;

use anyhow::{anyhow, bail, Context, Result};
use priority_sampling::ItemRecord;

const SECONDARY: &str = "secondary";

/// Streams records from `input` into `sink`, reading the input once.
/// Returns the number of records.
///
/// The header must name `id` and `weight`; `secondary` is optional and every
/// other column becomes an attribute.
pub fn read_flows<R: Read>(input: R, mut sink: impl FnMut(ItemRecord)) -> Result<u64> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers().context("reading the CSV header")?.clone();
    let column = |name: &str| header.iter().position(|h| h == name);
    let id_col = column("id").ok_or_else(|| anyhow!("CSV header has no `id` column"))?;
    let weight_col =
        column("weight").ok_or_else(|| anyhow!("CSV header has no `weight` column"))?;
    let secondary_col = column(SECONDARY);

    let mut count = 0;
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                bail!("line {line}: {e}");
            }
        }
        let line = record.position().map_or(0, |p| p.line());
        sink(
            parse_row(&header, &record, id_col, weight_col, secondary_col)
                .with_context(|| format!("line {line}"))?,
        );
        count += 1;
    }
    Ok(count)
}

fn parse_row(
    header: &csv::StringRecord,
    record: &csv::StringRecord,
    id_col: usize,
    weight_col: usize,
    secondary_col: Option<usize>,
) -> Result<ItemRecord> {
    let id: u64 = record[id_col]
        .parse()
        .map_err(|_| anyhow!("id {:?} is not a nonnegative integer", &record[id_col]))?;
    let weight: f64 = record[weight_col]
        .parse()
        .map_err(|_| anyhow!("weight {:?} is not a number", &record[weight_col]))?;
    if weight < 0.0 {
        bail!(
            "weight {weight} is negative; weights must be nonnegative. Put the signed value \
             in a `{SECONDARY}` column and use its absolute value as the weight"
        );
    }
    let mut item = ItemRecord::new(id, weight)?;
    if let Some(col) = secondary_col {
        let raw = &record[col];
        if !raw.is_empty() {
            let x: f64 = raw
                .parse()
                .map_err(|_| anyhow!("{SECONDARY} {raw:?} is not a number"))?;
            item = item.with_secondary(x);
        }
    }
    for (i, (name, value)) in header.iter().zip(record.iter()).enumerate() {
        if i != id_col && i != weight_col && Some(i) != secondary_col {
            item = item.with_attribute(name, value);
        }
    }
    Ok(item)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<Vec<ItemRecord>> {
        let mut items = Vec::new();
        read_flows(text.as_bytes(), |i| items.push(i))?;
        Ok(items)
    }

    #[test]
    fn attributes_and_secondary() {
        let items = read("id,weight,app,secondary\n1,2.5,ftp,-3\n2,0,web,\n").unwrap();
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].attribute("app"), Some("ftp"));
        assert_eq!(items[0].secondary, Some(-3.0));
        assert_eq!(items[1].secondary, None);
        assert_eq!(items[1].weight, 0.0);
    }

    #[test]
    fn bad_rows_name_their_line() {
        let err = read("id,weight\n1,2\n2,oops\n").unwrap_err();
        assert!(format!("{err:#}").starts_with("line 3"), "{err:#}");
        let err = read("id,weight\n1,2\n2,3,4\n").unwrap_err();
        assert!(format!("{err:#}").starts_with("line 3"), "{err:#}");
    }

    #[test]
    fn negative_weight_points_at_secondary() {
        let err = format!("{:#}", read("id,weight\n7,-1\n").unwrap_err());
        assert!(err.contains("line 2") && err.contains("secondary"), "{err}");
    }

    #[test]
    fn missing_columns() {
        assert!(read("id,bytes\n1,2\n").is_err());
        assert!(read("weight\n1\n").is_err());
    }
}
