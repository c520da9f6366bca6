//! Label map files.
//!
//! Two formats are accepted:
//!
//! * 8-bit single-channel images (PNG, PGM), where the pixel value is the
//!   class id;
//! * a plain-text grid: the first line is `width height`, followed by
//!   `height` rows of `width` whitespace-separated integers.
//!
//! Files ending in `.txt` or `.grid` use the text format; everything else is
//! handed to the image decoder.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use thiserror::Error;

use super::{ClassId, LabelMap, LabelMapError};

#[derive(Debug, Error)]
pub enum LabelMapIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("image is not 8-bit single-channel ({0:?})")]
    UnsupportedColor(image::ColorType),
    #[error("label {0} does not fit in an 8-bit image")]
    LabelTooLarge(ClassId),
    #[error(transparent)]
    Invalid(#[from] LabelMapError),
}

fn is_text_path(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("txt" | "grid")
    )
}

pub fn read_label_map(path: &Path) -> Result<LabelMap, LabelMapIoError> {
    if is_text_path(path) {
        let file = fs::File::open(path)?;
        read_text_grid(io::BufReader::new(file))
    } else {
        let img = image::open(path)?;
        match img {
            image::DynamicImage::ImageLuma8(gray) => {
                let (w, h) = gray.dimensions();
                let labels = gray.into_raw().into_iter().map(ClassId::from).collect();
                Ok(LabelMap::new(w as usize, h as usize, labels)?)
            }
            other => Err(LabelMapIoError::UnsupportedColor(other.color())),
        }
    }
}

pub fn write_label_map(map: &LabelMap, path: &Path) -> Result<(), LabelMapIoError> {
    if is_text_path(path) {
        let mut out = io::BufWriter::new(fs::File::create(path)?);
        write_text_grid(map, &mut out)?;
        out.flush()?;
        Ok(())
    } else {
        let bytes = map
            .labels()
            .iter()
            .map(|&l| u8::try_from(l).map_err(|_| LabelMapIoError::LabelTooLarge(l)))
            .collect::<Result<Vec<u8>, _>>()?;
        let img = image::GrayImage::from_raw(map.width() as u32, map.height() as u32, bytes)
            .expect("buffer length matches dimensions");
        img.save(path)?;
        Ok(())
    }
}

pub fn read_text_grid(reader: impl BufRead) -> Result<LabelMap, LabelMapIoError> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)))
        .filter(|l| !matches!(l, Ok((_, s)) if s.trim().is_empty()));

    let parse_err = |line: usize, message: String| LabelMapIoError::Parse { line, message };

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing `width height` header".into()))??;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| parse_err(line_no, format!("bad header: {e}")))?;
    let [width, height] = dims[..] else {
        return Err(parse_err(line_no, "header must be `width height`".into()));
    };

    let mut labels = Vec::with_capacity(width * height);
    for row in 0..height {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| parse_err(line_no + row + 1, format!("expected {height} rows")))??;
        let before = labels.len();
        for token in line.split_whitespace() {
            let v = token
                .parse::<ClassId>()
                .map_err(|e| parse_err(line_no, format!("bad label `{token}`: {e}")))?;
            labels.push(v);
        }
        if labels.len() - before != width {
            return Err(parse_err(
                line_no,
                format!("expected {width} labels, found {}", labels.len() - before),
            ));
        }
    }
    if let Some(extra) = lines.next() {
        let (line_no, _) = extra?;
        return Err(parse_err(
            line_no,
            "trailing data after the last row".into(),
        ));
    }
    Ok(LabelMap::new(width, height, labels)?)
}

pub fn write_text_grid(map: &LabelMap, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{} {}", map.width(), map.height())?;
    for row in map.labels().chunks(map.width()) {
        let mut first = true;
        for l in row {
            if !first {
                out.write_all(b" ")?;
            }
            write!(out, "{l}")?;
            first = false;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}
