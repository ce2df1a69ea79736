#include "xva/config.hpp"

#include "xva/error.hpp"
#include "xva/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace xva::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(std::string_view key, std::string_view text) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size() || !std::isfinite(v))
        throw InvalidArgument(std::string(key) + ": expected a finite number, got '" + std::string(text) + "'");
    return v;
}

long long parse_int(std::string_view key, std::string_view text) {
    long long v = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size())
        throw InvalidArgument(std::string(key) + ": expected an integer, got '" + std::string(text) + "'");
    return v;
}

int parse_int32(std::string_view key, std::string_view text) {
    const long long v = parse_int(key, text);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw InvalidArgument(std::string(key) + ": integer out of range");
    return static_cast<int>(v);
}

std::uint64_t parse_seed(std::string_view key, std::string_view text) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size())
        throw InvalidArgument(std::string(key) + ": expected a nonnegative integer, got '" + std::string(text) + "'");
    return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
    if (text == "true" || text == "on" || text == "1") return true;
    if (text == "false" || text == "off" || text == "0") return false;
    throw InvalidArgument(std::string(key) + ": expected true or false, got '" + std::string(text) + "'");
}

std::string parse_choice(std::string_view key, std::string_view text, std::initializer_list<std::string_view> allowed) {
    for (auto a : allowed)
        if (text == a) return std::string(text);
    std::string list;
    for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    throw InvalidArgument(std::string(key) + ": unknown value '" + std::string(text) + "' (expected one of " + list + ")");
}

struct KeyDef {
    std::string name;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define XVA_DOUBLE(sec, field) \
    KeyDef{sec "." #field, [](RunConfig& c, std::string_view v) { c.field = parse_double(sec "." #field, v); }, \
           [](const RunConfig& c) { return format_shortest(c.field); }}
#define XVA_INT(sec, field) \
    KeyDef{sec "." #field, [](RunConfig& c, std::string_view v) { c.field = parse_int32(sec "." #field, v); }, \
           [](const RunConfig& c) { return std::to_string(c.field); }}

const std::vector<KeyDef>& key_table() {
    static const std::vector<KeyDef> keys = {
        XVA_DOUBLE("model", mu),
        XVA_DOUBLE("model", sigma),
        XVA_DOUBLE("model", x0),
        XVA_INT("model", d),
        XVA_DOUBLE("claim", K),
        XVA_DOUBLE("claim", R),
        XVA_DOUBLE("claim", Rprime),
        XVA_DOUBLE("claim", lambda),
        XVA_DOUBLE("claim", lambdabar),
        XVA_DOUBLE("claim", r),
        XVA_DOUBLE("claim", T),
        KeyDef{"claim.payoff",
               [](RunConfig& c, std::string_view v) { c.payoff = parse_choice("claim.payoff", v, {"put", "forward", "constant"}); },
               [](const RunConfig& c) { return c.payoff; }},
        KeyDef{"claim.closeout",
               [](RunConfig& c, std::string_view v) { c.closeout = parse_choice("claim.closeout", v, {"recovery", "identity"}); },
               [](const RunConfig& c) { return c.closeout; }},
        KeyDef{"solver.method",
               [](RunConfig& c, std::string_view v) {
                   c.method = parse_choice("solver.method", v, {"analytic", "mc", "pde", "dbsde", "dbsde-multifc"});
               },
               [](const RunConfig& c) { return c.method; }},
        KeyDef{"solver.closeout-convention",
               [](RunConfig& c, std::string_view v) {
                   c.convention = parse_choice("solver.closeout-convention", v, {"replacement", "riskfree", "none"});
               },
               [](const RunConfig& c) { return c.convention; }},
        XVA_INT("solver", N),
        XVA_INT("solver", L),
        XVA_INT("solver", J),
        XVA_INT("solver", Np),
        XVA_INT("solver", iters),
        XVA_DOUBLE("solver", lr),
        XVA_INT("solver", M),
        KeyDef{"solver.seed", [](RunConfig& c, std::string_view v) { c.seed = parse_seed("solver.seed", v); },
               [](const RunConfig& c) { return std::to_string(c.seed); }},
        XVA_DOUBLE("solver", tolerance),
        KeyDef{"solver.mc_paths", [](RunConfig& c, std::string_view v) { c.mc_paths = parse_int("solver.mc_paths", v); },
               [](const RunConfig& c) { return std::to_string(c.mc_paths); }},
        KeyDef{"solver.scheme",
               [](RunConfig& c, std::string_view v) { c.scheme = parse_choice("solver.scheme", v, {"euler", "exact"}); },
               [](const RunConfig& c) { return c.scheme; }},
        KeyDef{"solver.early_stop",
               [](RunConfig& c, std::string_view v) { c.early_stop = parse_bool("solver.early_stop", v); },
               [](const RunConfig& c) { return std::string(c.early_stop ? "true" : "false"); }},
        XVA_INT("solver", min_iters),
    };
    return keys;
}

#undef XVA_DOUBLE
#undef XVA_INT

const KeyDef& find_key(std::string_view name) {
    for (const auto& k : key_table())
        if (k.name == name) return k;
    throw InvalidArgument("unknown config key '" + std::string(name) + "'");
}

} // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& k : key_table()) out.push_back(k.name);
        return out;
    }();
    return names;
}

void set_key(RunConfig& cfg, std::string_view dotted_key, std::string_view value) {
    find_key(dotted_key).set(cfg, trim(value));
}

void apply_ini(RunConfig& cfg, std::string_view text, const std::string& source) {
    std::string section;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        const auto where = [&] { return source + ":" + std::to_string(line_no) + ": "; };
        if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
        line = trim(line);
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') throw InvalidArgument(where() + "malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section != "model" && section != "claim" && section != "solver")
                throw InvalidArgument(where() + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw InvalidArgument(where() + "expected key = value");
        if (section.empty()) throw InvalidArgument(where() + "key outside of a section");
        const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
        if (!seen.insert(key).second) throw InvalidArgument(where() + "duplicate key '" + key + "'");
        try {
            set_key(cfg, key, line.substr(eq + 1));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(where() + e.what());
        }
        if (end == text.size()) break;
    }
}

void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    apply_ini(cfg, ss.str(), path);
}

std::string to_ini(const RunConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& k : key_table()) {
        const auto dot = k.name.find('.');
        const std::string sec = k.name.substr(0, dot);
        if (sec != section) {
            out += (section.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
            section = sec;
        }
        out += k.name.substr(dot + 1) + " = " + k.get(cfg) + "\n";
    }
    return out;
}

void RunConfig::validate() const {
    require(std::isfinite(mu), "model.mu must be finite");
    require(sigma > 0.0, "model.sigma must be positive");
    require(x0 > 0.0, "model.x0 must be positive");
    require(d >= 1, "model.d must be at least 1");
    require(K > 0.0, "claim.K must be positive");
    require(R >= 0.0 && R < 1.0, "claim.R must lie in [0, 1)");
    require(Rprime >= 0.0 && Rprime <= 1.0, "claim.Rprime must lie in [0, 1]");
    require(lambda >= 0.0, "claim.lambda must be nonnegative");
    require(lambdabar >= 0.0, "claim.lambdabar must be nonnegative");
    require(r >= 0.0, "claim.r must be nonnegative");
    require(T > 0.0, "claim.T must be positive");
    require(N >= 1, "solver.N must be at least 1");
    require(L >= 2, "solver.L must be at least 2");
    require(J >= 4, "solver.J must be at least 4");
    require(Np >= 1, "solver.Np must be at least 1");
    require(iters >= 1, "solver.iters must be at least 1");
    require(lr > 0.0, "solver.lr must be positive");
    require(M >= 1, "solver.M must be at least 1");
    require(tolerance > 0.0, "solver.tolerance must be positive");
    require(mc_paths >= 2, "solver.mc_paths must be at least 2");
    require(min_iters >= 0, "solver.min_iters must be nonnegative");

    if (method == "pde") require(d == 1, "solver.method=pde requires model.d = 1 (got " + std::to_string(d) + ")");
    if (method == "analytic") {
        require(d == 1, "solver.method=analytic requires model.d = 1 (got " + std::to_string(d) + ")");
        require(payoff == "put", "solver.method=analytic requires claim.payoff = put");
        require(closeout == "recovery", "solver.method=analytic requires claim.closeout = recovery");
        require(lambdabar == 0.0, "solver.method=analytic requires claim.lambdabar = 0");
    }
    if (method == "mc") {
        require(payoff == "put" && closeout == "recovery",
                "solver.method=mc supports claim.payoff = put with claim.closeout = recovery");
        require(lambdabar == 0.0, "solver.method=mc requires claim.lambdabar = 0");
    }
    if (method == "dbsde" || method == "dbsde-multifc")
        require(lambdabar == 0.0, "solver.method=" + method + " requires claim.lambdabar = 0");
    if (method == "dbsde-multifc")
        require(convention != "riskfree", "solver.method=dbsde-multifc supports closeout-convention replacement or none");
    if (lambdabar > 0.0) require(convention == "replacement", "claim.lambdabar > 0 requires closeout-convention = replacement");
}

Dynamics RunConfig::dynamics() const { return Dynamics::gbm(d, mu, sigma, x0); }

Claim RunConfig::claim() const {
    const CloseoutFunction f = closeout == "identity" ? CloseoutFunction::identity() : CloseoutFunction::recovery(R);
    Claim c = payoff == "put"       ? Claim::basket_put(d, K, r, T, f)
              : payoff == "forward" ? Claim::forward(d, K, r, T, f)
                                    : Claim::constant_payoff(K, r, T, f);
    if (lambdabar > 0.0)
        c.investor_closeout = closeout == "identity" ? CloseoutFunction::identity(CloseoutSide::investor)
                                                     : CloseoutFunction(PiecewiseLinearCloseout{1.0, Rprime}, CloseoutSide::investor);
    return c;
}

HazardModel RunConfig::hazard() const {
    return lambdabar > 0.0 ? HazardModel::constant(lambda, lambdabar) : HazardModel::constant(lambda);
}

} // namespace xva::cli
