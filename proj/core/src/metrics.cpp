#include "covex/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "covex/text.hpp"
#include "json.hpp"

namespace covex {

Prf prf(const Counts& c) {
  Prf r;
  if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  // 2tp / (2tp + fp + fn) equals the harmonic mean of P and R, but as one
  // rounded division equal ratios compare equal, which the threshold
  // tie-break relies on.
  if (c.tp > 0) r.f1 = static_cast<double>(2 * c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
  return r;
}

double macro_f1(std::span<const Counts> scopes) {
  double total = 0.0;
  std::size_t n = 0;
  for (const Counts& c : scopes) {
    if (c.empty()) continue;
    total += prf(c).f1;
    ++n;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

Counts count_slot(const std::set<std::string>& predicted, const std::set<std::string>& gold) {
  std::set<std::string> p;
  std::set<std::string> g;
  for (const auto& s : predicted) p.insert(text::normalize_chunk_text(s));
  for (const auto& s : gold) g.insert(text::normalize_chunk_text(s));
  Counts c;
  for (const auto& s : p) {
    if (g.contains(s)) {
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  for (const auto& s : g) {
    if (!p.contains(s)) ++c.fn;
  }
  return c;
}

Counts count_sentence(std::string_view predicted, std::string_view gold) {
  if (predicted == gold) return {1, 0, 0};
  return {0, 1, 1};
}

std::set<std::string> predicted_at(const SlotItem& item, double threshold) {
  std::set<std::string> out;
  for (const auto& c : item.candidates) {
    if (c.probability >= threshold) out.insert(c.text);
  }
  return out;
}

Counts count_at(std::span<const SlotItem> items, double threshold) {
  Counts total;
  for (const SlotItem& item : items) total += count_slot(predicted_at(item, threshold), item.gold);
  return total;
}

std::optional<double> best_threshold(std::span<const SlotItem> items) {
  if (items.empty()) return std::nullopt;
  double best = kThresholdGrid.front();
  double best_f1 = -1.0;
  for (double t : kThresholdGrid) {
    const double f1 = prf(count_at(items, t)).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best = t;
    }
  }
  return best;
}

namespace {

ScopeScore scope(const std::vector<const SubtaskScore*>& members) {
  ScopeScore s;
  std::vector<Counts> per;
  for (const SubtaskScore* m : members) {
    s.counts += m->counts;
    per.push_back(m->counts);
    if (!m->counts.empty()) ++s.subtasks;
  }
  s.micro = prf(s.counts);
  s.macro_f1 = macro_f1(per);
  return s;
}

nlohmann::ordered_json counts_json(const Counts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
}

nlohmann::ordered_json scope_json(const ScopeScore& s) {
  return {{"counts", counts_json(s.counts)},
          {"micro", {{"precision", s.micro.precision}, {"recall", s.micro.recall}, {"f1", s.micro.f1}}},
          {"macro_f1", s.macro_f1},
          {"subtasks_in_macro", s.subtasks}};
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

EvalReport build_report(std::vector<SubtaskScore> subtasks, std::string fingerprint) {
  EvalReport r;
  r.fingerprint = std::move(fingerprint);
  r.subtasks = std::move(subtasks);
  std::vector<const SubtaskScore*> all;
  std::vector<const SubtaskScore*> slot;
  std::vector<const SubtaskScore*> sent;
  std::map<EventType, std::vector<const SubtaskScore*>> by_event;
  for (const SubtaskScore& s : r.subtasks) {
    all.push_back(&s);
    (s.kind == SubtaskKind::slot_filling ? slot : sent).push_back(&s);
    by_event[s.event].push_back(&s);
  }
  r.overall = scope(all);
  r.slot_filling = scope(slot);
  r.sentence = scope(sent);
  double sum = 0.0;
  for (const auto& [event, members] : by_event) {
    r.events[event] = scope(members);
    sum += r.events[event].micro.f1;
  }
  r.event_micro_mean = by_event.empty() ? 0.0 : sum / static_cast<double>(by_event.size());
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["fingerprint"] = fingerprint;
  j["overall"] = scope_json(overall);
  j["overall"]["event_micro_mean"] = event_micro_mean;
  j["slot_filling"] = scope_json(slot_filling);
  j["sentence_classification"] = scope_json(sentence);
  nlohmann::ordered_json ev = nlohmann::ordered_json::object();
  for (const auto& [event, s] : events) ev[std::string(to_string(event))] = scope_json(s);
  j["events"] = ev;
  nlohmann::ordered_json subs = nlohmann::ordered_json::array();
  for (const SubtaskScore& s : subtasks) {
    const Prf p = prf(s.counts);
    nlohmann::ordered_json o = {{"event", std::string(to_string(s.event))},
                                {"subtask", s.subtask},
                                {"kind", std::string(to_string(s.kind))},
                                {"counts", counts_json(s.counts)},
                                {"precision", p.precision},
                                {"recall", p.recall},
                                {"f1", p.f1}};
    if (s.threshold) o["threshold"] = *s.threshold;
    subs.push_back(std::move(o));
  }
  j["subtasks"] = subs;
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  out << "fingerprint " << fingerprint << "\n\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %-22s %6s %6s %6s %6s\n", "event", "subtask", "P", "R",
                "F1", "thr");
  out << line;
  for (const SubtaskScore& s : subtasks) {
    const Prf p = prf(s.counts);
    std::snprintf(line, sizeof line, "%-16s %-22s %6s %6s %6s %6s\n",
                  std::string(to_string(s.event)).c_str(), s.subtask.c_str(),
                  fixed3(p.precision).c_str(), fixed3(p.recall).c_str(), fixed3(p.f1).c_str(),
                  s.threshold ? fixed3(*s.threshold).c_str() : "-");
    out << line;
  }
  out << '\n';
  std::snprintf(line, sizeof line, "%-16s %8s %8s %8s %9s\n", "scope", "micro-P", "micro-R",
                "micro-F1", "macro-F1");
  out << line;
  auto row = [&](const std::string& name, const ScopeScore& s) {
    std::snprintf(line, sizeof line, "%-16s %8s %8s %8s %9s\n", name.c_str(),
                  fixed3(s.micro.precision).c_str(), fixed3(s.micro.recall).c_str(),
                  fixed3(s.micro.f1).c_str(), fixed3(s.macro_f1).c_str());
    out << line;
  };
  for (const auto& [event, s] : events) row(std::string(to_string(event)), s);
  row("slot_filling", slot_filling);
  row("sentence", sentence);
  row("overall", overall);
  out << "mean per-event micro-F1 " << fixed3(event_micro_mean) << '\n';
  return out.str();
}

}  // namespace covex
