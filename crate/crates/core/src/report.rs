//! Deterministic JSON and CSV report writers.

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use std::io::{self, Write};

/// `%.17g`: 17 significant digits, exponent form outside `[1e−4, 1e17)`.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { "-" } else { "+" };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (16 - exp).max(0) as usize;
    let fixed = format!("{:.*}", decimals, x);
    let t = trim_zeros(&fixed);
    if t.contains('.') {
        t
    } else {
        format!("{t}.0")
    }
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0');
    let t = t.strip_suffix('.').unwrap_or(t);
    t.to_string()
}

/// Pretty printer whose floats use [`format_g17`].
pub struct G17Formatter {
    inner: PrettyFormatter<'static>,
}

impl Default for G17Formatter {
    fn default() -> Self {
        G17Formatter { inner: PrettyFormatter::with_indent(b"  ") }
    }
}

impl Formatter for G17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_g17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        w.write_all(format_g17(value as f64).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, G17Formatter::default());
    value.serialize(&mut ser).expect("in-memory serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// One CSV row of the flat projection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub analysis: String,
    pub index: usize,
    pub name: String,
    pub re: f64,
    pub im: f64,
    pub text: String,
}

impl Row {
    pub fn real(analysis: &str, index: usize, name: &str, v: f64) -> Self {
        Row { analysis: analysis.into(), index, name: name.into(), re: v, im: 0.0, text: String::new() }
    }

    pub fn complex(analysis: &str, index: usize, name: &str, v: crate::C64) -> Self {
        Row { analysis: analysis.into(), index, name: name.into(), re: v.re, im: v.im, text: String::new() }
    }

    pub fn text(analysis: &str, index: usize, name: &str, t: &str) -> Self {
        Row { analysis: analysis.into(), index, name: name.into(), re: f64::NAN, im: f64::NAN, text: t.into() }
    }
}

fn cell(x: f64) -> String {
    if x.is_finite() {
        format_g17(x)
    } else if x.is_nan() {
        String::new()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Writes rows with header `analysis,index,name,re,im,text`.
pub fn to_csv(rows: &[Row]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["analysis", "index", "name", "re", "im", "text"]).expect("in-memory");
    for r in rows {
        w.write_record([r.analysis.clone(), r.index.to_string(), r.name.clone(), cell(r.re), cell(r.im), r.text.clone()])
            .expect("in-memory");
    }
    String::from_utf8(w.into_inner().expect("in-memory")).expect("utf8")
}

/// Plot series row: `series,index,x,y,value`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub series: String,
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

pub fn plot_csv(rows: &[PlotRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "index", "x", "y", "value"]).expect("in-memory");
    for r in rows {
        w.write_record([r.series.clone(), r.index.to_string(), cell(r.x), cell(r.y), cell(r.value)])
            .expect("in-memory");
    }
    String::from_utf8(w.into_inner().expect("in-memory")).expect("utf8")
}
