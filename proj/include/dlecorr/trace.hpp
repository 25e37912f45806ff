#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace dlecorr {

struct TraceStep {
  int step;
  std::string rule;
  std::string before;
  std::string after;
  std::string justification;
};

// Line-delimited machine-readable derivation log; one rule application per
// line so golden traces diff cleanly.
class Trace {
public:
  void add(const std::string& rule, const std::string& before, const std::string& after,
           const std::string& justification) {
    steps_.push_back({(int)steps_.size() + 1, rule, before, after, justification});
  }

  const std::vector<TraceStep>& steps() const { return steps_; }

  std::string text() const {
    std::string out;
    for (const auto& s : steps_) {
      out += "[" + std::to_string(s.step) + "] " + s.rule + ": " + s.before + "  ~~>  " + s.after + "   (" +
             s.justification + ")\n";
    }
    return out;
  }

  std::string jsonl() const {
    std::string out;
    for (const auto& s : steps_) {
      nlohmann::json j{{"step", s.step}, {"rule", s.rule}, {"before", s.before}, {"after", s.after},
                       {"justification", s.justification}};
      out += j.dump() + "\n";
    }
    return out;
  }

private:
  std::vector<TraceStep> steps_;
};

}  // namespace dlecorr
