#pragma once

#include <string>
#include <vector>

namespace logtensor {

// One named verification outcome.  Checks that are expected to fail on bad
// input report through these instead of throwing; the witness pins down the
// first offending monomial or matrix entry.
struct CheckResult {
    std::string name;
    bool pass = true;
    std::string witness;
    double millis = 0.0;
};

class Report {
  public:
    void add(std::string name, bool pass, std::string witness = std::string()) {
        checks_.push_back({std::move(name), pass, std::move(witness), 0.0});
    }
    void add(CheckResult r) { checks_.push_back(std::move(r)); }
    void merge(const Report& o) {
        checks_.insert(checks_.end(), o.checks_.begin(), o.checks_.end());
    }

    const std::vector<CheckResult>& checks() const { return checks_; }
    bool all_pass() const {
        for (const auto& c : checks_) {
            if (!c.pass) return false;
        }
        return true;
    }
    int failures() const {
        int n = 0;
        for (const auto& c : checks_) {
            if (!c.pass) ++n;
        }
        return n;
    }

  private:
    std::vector<CheckResult> checks_;
};

} // namespace logtensor
