// Benchmark-only crate; kernels live in subfinsler-core.
