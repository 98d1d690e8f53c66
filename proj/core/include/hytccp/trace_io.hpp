#pragma once

#include "hytccp/explorer.hpp"

#include <string>
#include <vector>

namespace hytccp {

// Flat, render-ready image of a trace. Exact rationals are authoritative;
// every decimal in the rendered output is display-only.
struct ContRecord {
  std::string name;
  Rat value;
  Rat flow;

  bool operator==(const ContRecord&) const = default;
};

struct StepRecord {
  bool discrete = true;
  Rat tau;                          // 0 on discrete steps
  std::string store_text;           // canonical discrete-store rendering
  std::vector<ContRecord> continuous;
  std::vector<std::string> fired;   // guard renderings, selection steps only

  bool operator==(const StepRecord&) const = default;
};

struct DocumentMeta {
  std::string program_name;
  std::string program_source;  // hashed, not stored
  std::string policy;
  std::string limits;
};

struct TraceDocument {
  std::string program_name;
  std::string program_hash;    // fnv1a-64 of the source, 16 hex digits
  std::string policy;
  std::string limits;
  std::string initial_text;
  std::vector<ContRecord> initial_continuous;
  std::vector<StepRecord> steps;
  std::string terminal;
  Rat total_time;

  bool operator==(const TraceDocument&) const = default;
};

struct SampleRow {
  Rat time;
  std::string variable;
  Rat value;

  bool operator==(const SampleRow&) const = default;
};

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);

TraceDocument to_structured(const Trace& t, const DocumentMeta& meta = {});

// One self-contained record per line: a header line, one line per step, a
// terminal line. Byte-stable for equal documents.
std::string render_jsonl(const TraceDocument& doc);

// Column-aligned listing for reading, not for diffing.
std::string render_text(const TraceDocument& doc);

// Inverse of render_jsonl up to exact fields. Throws std::runtime_error on
// malformed input.
TraceDocument parse_document(const std::string& jsonl);

// Piecewise-linear sampling of every continuous variable at multiples of
// `step` plus every store boundary in the trace. Expects a coalesced trace;
// values are projected exactly. Rows are (time, variable) sorted.
std::vector<SampleRow> to_samples(const Trace& t, const Rat& step);

// "time,variable,value" with exact rational cells.
std::string render_csv(const std::vector<SampleRow>& rows);

}  // namespace hytccp
