#include "hytccp/trace_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <stdexcept>

namespace hytccp {

using ojson = nlohmann::ordered_json;

std::string fnv1a_hex(std::string_view data) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

namespace {

std::vector<ContRecord> cont_records(const ContinuousStore& s) {
  std::vector<ContRecord> out;
  for (auto& [name, e] : s.entries()) out.push_back({name, e.value, e.flow});
  return out;
}

ojson rat_json(const Rat& r) {
  ojson j;
  j["num"] = rat_num(r).str();
  j["den"] = rat_den(r).str();
  j["dec"] = rat_to_decimal(r);
  return j;
}

Rat rat_from_json(const ojson& j) {
  BigInt num(j.at("num").get<std::string>());
  BigInt den(j.at("den").get<std::string>());
  if (den == 0) throw std::runtime_error("trace document: zero denominator");
  return Rat(num, den);
}

ojson cont_json(const std::vector<ContRecord>& entries) {
  ojson arr = ojson::array();
  for (auto& e : entries) {
    ojson j;
    j["var"] = e.name;
    j["value"] = rat_json(e.value);
    j["flow"] = rat_json(e.flow);
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<ContRecord> cont_from_json(const ojson& arr) {
  std::vector<ContRecord> out;
  for (auto& j : arr)
    out.push_back({j.at("var").get<std::string>(), rat_from_json(j.at("value")),
                   rat_from_json(j.at("flow"))});
  return out;
}

std::string cont_text(const std::vector<ContRecord>& entries) {
  std::string out;
  for (auto& e : entries) {
    if (!out.empty()) out += ", ";
    out += e.name + " := " + rat_to_string(e.value) + " flow " + rat_to_string(e.flow);
  }
  return out;
}

}  // namespace

TraceDocument to_structured(const Trace& t, const DocumentMeta& meta) {
  TraceDocument doc;
  doc.program_name = meta.program_name;
  doc.program_hash = fnv1a_hex(meta.program_source);
  doc.policy = meta.policy;
  doc.limits = meta.limits;
  doc.initial_text = display_constraint(t.initial.discrete);
  doc.initial_continuous = cont_records(t.initial.continuous);
  for (auto& s : t.steps) {
    StepRecord rec;
    rec.discrete = s.discrete;
    rec.tau = s.discrete ? Rat(0) : s.tau;
    rec.store_text = display_constraint(s.store.discrete);
    rec.continuous = cont_records(s.store.continuous);
    for (auto& f : s.fired) rec.fired.push_back(display_constraint(f.guard));
    doc.steps.push_back(std::move(rec));
  }
  doc.terminal = terminal_name(t.terminal);
  doc.total_time = t.total_time();
  return doc;
}

std::string render_jsonl(const TraceDocument& doc) {
  std::string out;

  ojson head;
  head["record"] = "trace";
  head["program"] = doc.program_name;
  head["hash"] = doc.program_hash;
  head["policy"] = doc.policy;
  head["limits"] = doc.limits;
  head["initial"]["store"] = doc.initial_text;
  head["initial"]["continuous"] = cont_json(doc.initial_continuous);
  head["steps"] = doc.steps.size();
  out += head.dump();
  out += '\n';

  size_t i = 0;
  for (auto& s : doc.steps) {
    ojson j;
    j["record"] = "step";
    j["index"] = ++i;
    j["label"] = s.discrete ? "sigma" : "tau";
    if (!s.discrete) j["tau"] = rat_json(s.tau);
    j["store"] = s.store_text;
    j["continuous"] = cont_json(s.continuous);
    if (!s.fired.empty()) j["fired"] = s.fired;
    out += j.dump();
    out += '\n';
  }

  ojson tail;
  tail["record"] = "end";
  tail["terminal"] = doc.terminal;
  tail["time"] = rat_json(doc.total_time);
  out += tail.dump();
  out += '\n';
  return out;
}

TraceDocument parse_document(const std::string& jsonl) {
  TraceDocument doc;
  bool saw_head = false, saw_tail = false;
  std::istringstream in(jsonl);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      ojson j = ojson::parse(line);
      auto kind = j.at("record").get<std::string>();
      if (kind == "trace") {
        if (saw_head) throw std::runtime_error("trace document: repeated header");
        saw_head = true;
        doc.program_name = j.at("program").get<std::string>();
        doc.program_hash = j.at("hash").get<std::string>();
        doc.policy = j.at("policy").get<std::string>();
        doc.limits = j.at("limits").get<std::string>();
        doc.initial_text = j.at("initial").at("store").get<std::string>();
        doc.initial_continuous = cont_from_json(j.at("initial").at("continuous"));
      } else if (kind == "step") {
        if (!saw_head || saw_tail) throw std::runtime_error("trace document: stray step record");
        StepRecord rec;
        rec.discrete = j.at("label").get<std::string>() == "sigma";
        rec.tau = rec.discrete ? Rat(0) : rat_from_json(j.at("tau"));
        rec.store_text = j.at("store").get<std::string>();
        rec.continuous = cont_from_json(j.at("continuous"));
        if (j.contains("fired")) rec.fired = j.at("fired").get<std::vector<std::string>>();
        doc.steps.push_back(std::move(rec));
      } else if (kind == "end") {
        if (!saw_head || saw_tail) throw std::runtime_error("trace document: stray end record");
        saw_tail = true;
        doc.terminal = j.at("terminal").get<std::string>();
        doc.total_time = rat_from_json(j.at("time"));
      } else {
        throw std::runtime_error("trace document: unknown record kind '" + kind + "'");
      }
    } catch (const ojson::exception& e) {
      throw std::runtime_error(std::string("trace document: ") + e.what());
    }
  }
  if (!saw_head || !saw_tail) throw std::runtime_error("trace document: truncated");
  return doc;
}

std::string render_text(const TraceDocument& doc) {
  std::string out;
  out += "trace " + (doc.program_name.empty() ? std::string("<unnamed>") : doc.program_name) +
         "  [fnv1a " + doc.program_hash + "]\n";
  if (!doc.policy.empty()) out += "  policy: " + doc.policy + "\n";
  if (!doc.limits.empty()) out += "  limits: " + doc.limits + "\n";
  out += "  init: " + doc.initial_text;
  if (!doc.initial_continuous.empty()) out += "  |  " + cont_text(doc.initial_continuous);
  out += "\n";

  std::vector<std::string> labels;
  size_t label_w = 0;
  for (auto& s : doc.steps) {
    std::string l = s.discrete ? "sigma" : "tau " + rat_to_string(s.tau) +
                                               " (" + rat_to_decimal(s.tau) + ")";
    label_w = std::max(label_w, l.size());
    labels.push_back(std::move(l));
  }
  size_t idx_w = std::to_string(doc.steps.size()).size();
  for (size_t i = 0; i < doc.steps.size(); ++i) {
    auto& s = doc.steps[i];
    std::string idx = std::to_string(i + 1);
    out += "  " + std::string(idx_w - idx.size(), ' ') + idx + "  " + labels[i] +
           std::string(label_w - labels[i].size(), ' ') + "  " + s.store_text;
    if (!s.continuous.empty()) out += "  |  " + cont_text(s.continuous);
    for (auto& f : s.fired) out += "\n" + std::string(idx_w + label_w + 6, ' ') + "fired: " + f;
    out += "\n";
  }
  out += "  terminal: " + doc.terminal + " at time " + rat_to_string(doc.total_time) + " (" +
         rat_to_decimal(doc.total_time) + ")\n";
  return out;
}

std::vector<SampleRow> to_samples(const Trace& t, const Rat& step) {
  if (step <= 0) throw std::invalid_argument("to_samples: step must be positive");

  // One checkpoint per instant; consecutive discrete steps collapse onto the
  // last store at that time.
  std::vector<std::pair<Rat, const HybridStore*>> marks;
  marks.emplace_back(Rat(0), &t.initial);
  for (auto& s : t.steps) {
    if (s.discrete) {
      marks.back().second = &s.store;
    } else {
      marks.emplace_back(marks.back().first + s.tau, &s.store);
    }
  }

  std::vector<SampleRow> rows;
  for (auto& [time, store] : marks)
    for (auto& [name, e] : store->continuous.entries()) rows.push_back({time, name, e.value});

  for (size_t i = 0; i + 1 < marks.size(); ++i) {
    const Rat& lo = marks[i].first;
    const Rat& hi = marks[i + 1].first;
    // First multiple of `step` strictly above lo.
    BigInt k = rat_num(lo / step) / rat_den(lo / step);
    Rat at = Rat(k) * step;
    while (at <= lo) at += step;
    for (; at < hi; at += step)
      for (auto& [name, e] : marks[i].second->continuous.entries())
        rows.push_back({at, name, e.value + e.flow * (at - lo)});
  }

  std::sort(rows.begin(), rows.end(), [](const SampleRow& a, const SampleRow& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.variable < b.variable;
  });
  return rows;
}

std::string render_csv(const std::vector<SampleRow>& rows) {
  std::string out = "time,variable,value\n";
  for (auto& r : rows)
    out += rat_to_string(r.time) + "," + r.variable + "," + rat_to_string(r.value) + "\n";
  return out;
}

}  // namespace hytccp
