#include "bsmdp/policy.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <locale>
#include <ostream>
#include <sstream>
#include <string>

namespace bsmdp {

void StochasticPolicy::validate(const ModelParams& params, ActionScope scope, double tol) const {
    const StateSpace space(params);
    if (table_.size() != space.size()) {
        throw ModelError("policy covers " + std::to_string(table_.size()) + " states, model has " +
                         std::to_string(space.size()));
    }
    for (std::size_t i = 0; i < table_.size(); ++i) {
        const State s = space.state(i);
        const ActionSet allowed = allowed_actions(s, params, scope);
        double sum = 0.0;
        for (Action a : kAllActions) {
            const double p = table_[i][slot(a)];
            if (!std::isfinite(p) || p < 0.0) {
                throw ModelError("policy probability at " + to_string(s) + " is negative or NaN");
            }
            if (p > 0.0 && !allowed.contains(a)) {
                throw ModelError("policy puts mass on " + std::string(to_string(a)) + " at " +
                                 to_string(s) + " outside " + to_string(allowed));
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > tol) {
            throw ModelError("policy row at " + to_string(s) + " sums to " + std::to_string(sum));
        }
    }
}

void StochasticPolicy::write_csv(std::ostream& out, const ModelParams& params) const {
    const StateSpace space(params);
    out << "c,d,e,action,probability\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < table_.size(); ++i) {
        const State s = space.state(i);
        for (Action a : kAllActions) {
            const double p = table_[i][slot(a)];
            if (p <= 0.0) continue;
            out << s.channel << ',' << s.queue << ',' << s.energy << ',' << static_cast<int>(a)
                << ',' << p << '\n';
        }
    }
}

StochasticPolicy StochasticPolicy::read_csv(std::istream& in, const ModelParams& params) {
    const StateSpace space(params);
    StochasticPolicy policy(space.size());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line_no == 1) continue; // header
        std::istringstream fields(line);
        fields.imbue(std::locale::classic());
        State s;
        int action = 0;
        double p = 0.0;
        char comma = 0;
        if (!(fields >> s.channel >> comma >> s.queue >> comma >> s.energy >> comma >> action >>
              comma >> p) ||
            action < 1 || action > 4 || !space.contains(s)) {
            throw ModelError("malformed policy row at line " + std::to_string(line_no) + ": " +
                             line);
        }
        policy.at(space.index(s))[static_cast<std::size_t>(action - 1)] += p;
    }
    return policy;
}

StochasticPolicy StochasticPolicy::uniform(const ModelParams& params) {
    const StateSpace space(params);
    StochasticPolicy policy(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const ActionSet feasible = feasible_actions(space.state(i), params);
        const double p = 1.0 / static_cast<double>(feasible.size());
        for (Action a : feasible.to_vector()) policy.at(i)[slot(a)] = p;
    }
    return policy;
}

} // namespace bsmdp
