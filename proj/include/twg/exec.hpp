#pragma once

namespace twg {

// Every parallel kernel keeps a plain serial twin; tests assert the two
// produce bit-identical results, the benchmark tool compares their speed.
enum class ExecMode { Serial, Parallel };

// 0 means "use the OpenMP default".
int resolve_workers(int worker_cap);

}  // namespace twg
