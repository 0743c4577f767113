#pragma once

#include <string>
#include <vector>

namespace graphclt {

struct CriterionCheck {
    std::string name;
    double observed = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = true;
    double seconds = 0.0;
    std::vector<CriterionCheck> checks;
    std::vector<std::string> notes;
};

/// Ordered list of verification criteria ids (1..9).
std::vector<int> acceptance_criteria();

/// Runs one criterion end to end at its published scale.
CriterionResult run_acceptance_criterion(int id);

/// Group label ("numerics", "oracle", "clt", "stopping", "harness",
/// "determinism", "all") or a comma list of ids -> criterion ids.
/// Throws std::invalid_argument for unknown labels.
std::vector<int> criteria_for_selection(const std::string& selection);

/// One line per criterion; true iff all selected criteria pass.
bool run_acceptance(const std::vector<int>& ids, std::ostream& out, bool verbose = false);

}  // namespace graphclt
