use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use fgrid_bench::{thinned, trades};
use fgrid_core::grid::StaticContext;
use fgrid_core::value::{align, elementwise, BinaryOp};
use fgrid_core::{compile, evaluate, parse, AlignmentPolicy, FormulaGrid, ObservationSeries, Value};

fn parsing(c: &mut Criterion) {
    let formulas = ["=A4/A5", "=SUM(A1*A2)/SUM(A2)", "=-(A1 + 2.5e3) * ([TradePrice] - AVERAGE([TradePrice])) / (B7 - -C9)"];
    let mut g = c.benchmark_group("parse");
    for f in formulas {
        g.bench_with_input(BenchmarkId::from_parameter(f.len()), f, |b, f| b.iter(|| parse(black_box(f)).unwrap()));
    }
    g.finish();
    c.bench_function("compile/vwap", |b| b.iter(|| compile(black_box(&FormulaGrid::vwap())).unwrap()));
}

fn vwap(c: &mut Criterion) {
    let compiled = compile(&FormulaGrid::vwap()).unwrap();
    let mut g = c.benchmark_group("evaluate/vwap");
    for n in [1_000, 25_000, 250_000] {
        let (p, s) = trades(n, 1);
        let ctx = StaticContext::new().with("TradePrice", p).with("TradeSize", s);
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &ctx, |b, ctx| b.iter(|| evaluate(&compiled, ctx)));
    }
    g.finish();
}

fn alignment(c: &mut Criterion) {
    let (price, _) = trades(25_000, 2);
    let fx = thinned(&price, 0.6, 3);
    let mut g = c.benchmark_group("align/25k");
    for policy in [AlignmentPolicy::Intersect, AlignmentPolicy::UnionFillForward, AlignmentPolicy::UnionFillZero] {
        g.bench_function(policy.as_str(), |b| b.iter(|| align(black_box(&price), black_box(&fx), policy).unwrap()));
    }
    let same = ObservationSeries::from_columns(price.times().to_vec(), price.values().iter().map(|v| v * 2.0).collect()).unwrap();
    g.bench_function("identical-timestamps", |b| b.iter(|| align(&price, &same, AlignmentPolicy::Strict).unwrap()));
    g.finish();

    let (a, b) = (Value::Series(price), Value::Series(fx));
    c.bench_function("multiply/25k-intersect", |bench| {
        bench.iter(|| elementwise(BinaryOp::Mul, black_box(&a), black_box(&b), AlignmentPolicy::Intersect))
    });
}

criterion_group!(benches, parsing, vwap, alignment);
criterion_main!(benches);
