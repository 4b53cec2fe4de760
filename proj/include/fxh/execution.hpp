#pragma once

namespace fxh {

/// Selects the serial reference path or the OpenMP path of a kernel. Both produce
/// bit-identical results.
enum class Execution { serial, parallel };

}  // namespace fxh
