//! School-point CSV I/O.
//!
//! Required columns are `id,name,lon,lat,label` where `label` is `yes`,
//! `no`, or empty for unlabeled points. Four optional survey columns
//! (`education_level`, `dist_lte_m`, `dist_umts_m`, `dist_gsm_m`) are read
//! when present and written when any record carries a value for them.

use std::fs;
use std::path::Path;

use super::{Connectivity, GeoError, GeoPoint, SchoolRecord};

const OPTIONAL_COLUMNS: [&str; 4] = ["education_level", "dist_lte_m", "dist_umts_m", "dist_gsm_m"];

pub fn parse_schools_csv(path: impl AsRef<Path>) -> Result<Vec<SchoolRecord>, GeoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| GeoError::io(path.display().to_string(), e))?;
    schools_from_str(&text, &path.display().to_string())
}

pub(crate) fn schools_from_str(text: &str, origin: &str) -> Result<Vec<SchoolRecord>, GeoError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| GeoError::parse(origin, 1, e.to_string()))?
        .clone();

    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| col(name).ok_or_else(|| GeoError::MissingColumn(name.to_string()));
    let id_at = required("id")?;
    let name_at = required("name")?;
    let lon_at = required("lon")?;
    let lat_at = required("lat")?;
    let label_at = required("label")?;
    let optional: Vec<Option<usize>> = OPTIONAL_COLUMNS.iter().map(|c| col(c)).collect();

    let mut records = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|e| GeoError::parse(origin, line, e.to_string()))?;
        let field = |at: usize| row.get(at).unwrap_or("");

        let parse_f64 = |raw: &str| -> Result<f64, GeoError> {
            raw.parse::<f64>()
                .map_err(|_| GeoError::parse(origin, line, format!("bad numeric value '{raw}'")))
        };
        let lon = parse_f64(field(lon_at))?;
        let lat = parse_f64(field(lat_at))?;
        let location = GeoPoint::new(lon, lat)
            .map_err(|_| GeoError::parse(origin, line, format!("coordinate out of range ({lon}, {lat})")))?;

        let label = match field(label_at) {
            "yes" => Some(Connectivity::Connected),
            "no" => Some(Connectivity::Unconnected),
            "" => None,
            other => {
                return Err(GeoError::parse(
                    origin,
                    line,
                    format!("label must be 'yes', 'no', or empty, found '{other}'"),
                ))
            }
        };

        let opt_string = |at: Option<usize>| -> Option<String> {
            at.map(field).filter(|s| !s.is_empty()).map(str::to_string)
        };
        let opt_f64 = |at: Option<usize>| -> Result<Option<f64>, GeoError> {
            match at.map(field).filter(|s| !s.is_empty()) {
                Some(raw) => parse_f64(raw).map(Some),
                None => Ok(None),
            }
        };

        records.push(SchoolRecord {
            id: field(id_at).to_string(),
            name: field(name_at).to_string(),
            location,
            label,
            education_level: opt_string(optional[0]),
            dist_lte_m: opt_f64(optional[1])?,
            dist_umts_m: opt_f64(optional[2])?,
            dist_gsm_m: opt_f64(optional[3])?,
        });
    }
    Ok(records)
}

pub fn write_schools_csv(path: impl AsRef<Path>, records: &[SchoolRecord]) -> Result<(), GeoError> {
    let path = path.as_ref();
    fs::write(path, schools_to_string(records)).map_err(|e| GeoError::io(path.display().to_string(), e))
}

pub(crate) fn schools_to_string(records: &[SchoolRecord]) -> String {
    let has = [
        records.iter().any(|r| r.education_level.is_some()),
        records.iter().any(|r| r.dist_lte_m.is_some()),
        records.iter().any(|r| r.dist_umts_m.is_some()),
        records.iter().any(|r| r.dist_gsm_m.is_some()),
    ];

    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id", "name", "lon", "lat", "label"];
    for (i, name) in OPTIONAL_COLUMNS.iter().enumerate() {
        if has[i] {
            header.push(name);
        }
    }
    writer.write_record(&header).expect("csv write to memory");

    let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for r in records {
        let mut row = vec![
            r.id.clone(),
            r.name.clone(),
            format!("{}", r.location.lon),
            format!("{}", r.location.lat),
            r.label.map(Connectivity::as_yes_no).unwrap_or("").to_string(),
        ];
        let extras = [
            r.education_level.clone().unwrap_or_default(),
            fmt_opt(r.dist_lte_m),
            fmt_opt(r.dist_umts_m),
            fmt_opt(r.dist_gsm_m),
        ];
        for (i, v) in extras.into_iter().enumerate() {
            if has[i] {
                row.push(v);
            }
        }
        writer.write_record(&row).expect("csv write to memory");
    }
    String::from_utf8(writer.into_inner().expect("csv flush")).expect("csv output is utf8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, lon: f64, lat: f64, label: Option<Connectivity>) -> SchoolRecord {
        SchoolRecord::new(id, format!("School {id}"), GeoPoint::new(lon, lat).unwrap(), label)
    }

    #[test]
    fn parses_minimal_file() {
        let text = "id,name,lon,lat,label\ns1,Alpha,30.05,-1.95,yes\ns2,Beta,30.06,-1.94,no\ns3,Gamma,30.07,-1.93,\n";
        let recs = schools_from_str(text, "<mem>").unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].label, Some(Connectivity::Connected));
        assert_eq!(recs[1].label, Some(Connectivity::Unconnected));
        assert_eq!(recs[2].label, None);
        assert_eq!(recs[0].location.lon, 30.05);
        assert!(recs[0].education_level.is_none());
    }

    #[test]
    fn parses_optional_columns() {
        let text = "id,name,lon,lat,label,education_level,dist_lte_m,dist_umts_m,dist_gsm_m\n\
                    s1,Alpha,30.0,-2.0,yes,primary,120.5,80,\n";
        let recs = schools_from_str(text, "<mem>").unwrap();
        assert_eq!(recs[0].education_level.as_deref(), Some("primary"));
        assert_eq!(recs[0].dist_lte_m, Some(120.5));
        assert_eq!(recs[0].dist_umts_m, Some(80.0));
        assert_eq!(recs[0].dist_gsm_m, None);
    }

    #[test]
    fn missing_required_column() {
        let text = "id,name,lon,lat\ns1,Alpha,30.0,-2.0\n";
        assert!(matches!(
            schools_from_str(text, "<mem>"),
            Err(GeoError::MissingColumn(c)) if c == "label"
        ));
    }

    #[test]
    fn bad_rows_report_line_numbers() {
        let text = "id,name,lon,lat,label\ns1,Alpha,30.0,-2.0,yes\ns2,Beta,oops,-2.0,no\n";
        assert!(matches!(
            schools_from_str(text, "<mem>"),
            Err(GeoError::Parse { line: 3, .. })
        ));
        let text = "id,name,lon,lat,label\ns1,Alpha,30.0,-2.0,maybe\n";
        assert!(matches!(
            schools_from_str(text, "<mem>"),
            Err(GeoError::Parse { line: 2, .. })
        ));
        let text = "id,name,lon,lat,label\ns1,Alpha,200.0,-2.0,yes\n";
        assert!(matches!(
            schools_from_str(text, "<mem>"),
            Err(GeoError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let mut a = rec("s1", 30.051234, -1.957, Some(Connectivity::Connected));
        a.education_level = Some("secondary".to_string());
        a.dist_lte_m = Some(433.25);
        let b = rec("s2", 30.08, -1.91, None);
        let text = schools_to_string(&[a.clone(), b.clone()]);
        let back = schools_from_str(&text, "<mem>").unwrap();
        assert_eq!(back, vec![a, b]);
        assert_eq!(schools_to_string(&back), text);
    }

    #[test]
    fn optional_columns_omitted_when_unused() {
        let text = schools_to_string(&[rec("s1", 30.0, -2.0, Some(Connectivity::Unconnected))]);
        assert_eq!(text, "id,name,lon,lat,label\ns1,School s1,30,-2,no\n");
    }

    #[test]
    fn names_with_commas_survive() {
        let mut r = rec("s1", 30.0, -2.0, None);
        r.name = "St. Mary, Annex".to_string();
        let text = schools_to_string(&[r.clone()]);
        let back = schools_from_str(&text, "<mem>").unwrap();
        assert_eq!(back[0].name, r.name);
    }
}
