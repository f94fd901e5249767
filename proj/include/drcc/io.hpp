#pragma once

#include <string>

#include "drcc/stats.hpp"

namespace drcc::io {

/// Parses sample CSV: header `w1,...,wl`, one scenario per row, '.' decimal
/// separator. Throws InputError on malformed text or non-finite values.
stats::SampleSet parse_samples_csv(const std::string& text);
stats::SampleSet read_samples_csv(const std::string& path);

/// Header plus rows, every value printed with 17 significant digits.
std::string format_samples_csv(const stats::SampleSet& samples);
void write_samples_csv(const std::string& path, const stats::SampleSet& samples);

std::string read_text(const std::string& path);
/// Replaces the file contents with `text`.
void write_text(const std::string& path, const std::string& text);

/// Generator configuration JSON:
///   {"family": "triangular" | "truncated-normal" | "beta-mixture",
///    "dimension", "count", "correlation",
///    "mean", "stddev", "lower", "upper", "peak",
///    "components": [{"weight", "a", "b", "lower", "upper"}]}
/// Fields not used by the family may be omitted. Throws InputError.
stats::GeneratorSpec parse_generator_spec(const std::string& text);

/// printf-style "%.17g" rendering used for every emitted number.
std::string fmt(double v);

}  // namespace drcc::io
