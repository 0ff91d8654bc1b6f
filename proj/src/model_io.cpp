#include "mfglift/model_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mfglift/errors.hpp"
#include "mfglift/measures.hpp"

namespace mfglift {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

[[noreturn]] void fail(const std::string& name, std::size_t line,
                       std::size_t col, const std::string& msg) {
    throw ParseError(name + ":" + std::to_string(line) + ":" +
                     std::to_string(col) + ": " + msg);
}

/// One key=value occurrence with its position for error reporting.
struct Entry {
    std::string value;
    std::size_t line = 0;
    std::size_t col = 0;
    mutable bool used = false;
};

using Section = std::map<std::string, Entry>;

struct RawFile {
    std::string name;
    std::map<std::string, Section> sections;
};

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

RawFile split_sections(const std::string& text, const std::string& name) {
    static const char* known_sections[] = {"dynamics", "cost", "common_noise",
                                           "control", "grid", "affine"};
    RawFile raw;
    raw.name = name;
    std::istringstream is(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') {
            continue;
        }
        if (stripped.front() == '[') {
            if (stripped.back() != ']') {
                fail(name, lineno, 1, "unterminated section header");
            }
            section = trim(stripped.substr(1, stripped.size() - 2));
            bool ok = false;
            for (const char* s : known_sections) ok = ok || section == s;
            if (!ok) {
                fail(name, lineno, 2, "unknown section [" + section + "]");
            }
            raw.sections[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            fail(name, lineno, 1, "expected key = value");
        }
        if (section.empty()) {
            fail(name, lineno, 1, "key outside any [section]");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) fail(name, lineno, 1, "empty key");
        Entry entry;
        entry.value = trim(line.substr(eq + 1));
        entry.line = lineno;
        std::size_t col = eq + 1;
        while (col < line.size() &&
               std::isspace(static_cast<unsigned char>(line[col]))) {
            ++col;
        }
        entry.col = col + 1;
        if (raw.sections[section].count(key)) {
            fail(name, lineno, 1, "duplicate key '" + key + "'");
        }
        raw.sections[section][key] = entry;
    }
    return raw;
}

/// Cursor over one value string, carrying file coordinates for messages.
struct Cursor {
    const std::string& name;
    const std::string& s;
    std::size_t line;
    std::size_t col0;
    std::size_t pos = 0;

    [[noreturn]] void fail_here(const std::string& msg) const {
        fail(name, line, col0 + pos, msg);
    }
    void skip_ws() {
        while (pos < s.size() &&
               std::isspace(static_cast<unsigned char>(s[pos]))) {
            ++pos;
        }
    }
    bool done() {
        skip_ws();
        return pos >= s.size();
    }
    char peek() const { return pos < s.size() ? s[pos] : '\0'; }

    double number() {
        skip_ws();
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail_here("expected a number");
        pos += static_cast<std::size_t>(end - begin);
        return v;
    }

    std::string ident() {
        skip_ws();
        std::size_t b = pos;
        while (pos < s.size() &&
               (std::isalnum(static_cast<unsigned char>(s[pos])) ||
                s[pos] == '_')) {
            ++pos;
        }
        if (pos == b) fail_here("expected a name");
        return s.substr(b, pos - b);
    }

    void expect(char c) {
        skip_ws();
        if (peek() != c) {
            fail_here(std::string("expected '") + c + "'");
        }
        ++pos;
    }
};

GFunc parse_g(Cursor& cur) {
    const std::string id = cur.ident();
    if (id == "identity") return GFunc{GKind::identity, 1.0};
    if (id == "tanh") return GFunc{GKind::tanh_, 1.0};
    if (id == "scale" || id == "quad") {
        cur.expect('(');
        const double p = cur.number();
        cur.expect(')');
        return GFunc{id == "scale" ? GKind::scale : GKind::quad, p};
    }
    cur.fail_here("unknown function '" + id +
                  "' (want identity, tanh, scale(c), quad(c))");
}

Kernel parse_kernel(Cursor& cur) {
    const std::string id = cur.ident();
    if (id == "identity") return Kernel{KernelKind::identity, 0.0};
    if (id == "gaussian" || id == "indicator") {
        cur.expect('(');
        const double p = cur.number();
        cur.expect(')');
        if (!(p > 0.0)) cur.fail_here("kernel parameter must be positive");
        return Kernel{id == "gaussian" ? KernelKind::gaussian
                                       : KernelKind::indicator,
                      p};
    }
    cur.fail_here("unknown kernel '" + id +
                  "' (want identity, gaussian(w), indicator(r))");
}

void negate_term(Term& t, Cursor& cur) {
    switch (t.kind) {
        case TermKind::constant_:
        case TermKind::control_linear:
        case TermKind::control_quad:
        case TermKind::state_linear:
            t.coef = -t.coef;
            return;
        case TermKind::functional:
            switch (t.func.G.kind) {
                case GKind::identity:
                    t.func.G = GFunc{GKind::scale, -1.0};
                    return;
                case GKind::scale:
                case GKind::quad:
                    t.func.G.param = -t.func.G.param;
                    return;
                case GKind::tanh_:
                    cur.fail_here(
                        "cannot negate a tanh term; fold the sign into "
                        "scale(...)");
            }
    }
    cur.fail_here("cannot negate this term");
}

Coefficient parse_coefficient(const RawFile& raw, const Entry& entry) {
    Cursor cur{raw.name, entry.value, entry.line, entry.col, 0};
    Coefficient coef;
    bool first = true;
    while (!cur.done()) {
        bool negative = false;
        if (!first) {
            cur.skip_ws();
            const char op = cur.peek();
            if (op != '+' && op != '-') {
                cur.fail_here("expected '+' or '-' between terms");
            }
            ++cur.pos;
            negative = op == '-';
        }
        cur.skip_ws();
        Term term;
        const char c = cur.peek();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
            c == '-' || c == '+') {
            term = Term::constant(cur.number());
        } else {
            const std::string id = cur.ident();
            if (id == "control") {
                double k = 1.0;
                cur.skip_ws();
                if (cur.peek() == '(') {
                    cur.expect('(');
                    k = cur.number();
                    cur.expect(')');
                }
                term = Term::control_linear(k);
            } else if (id == "control2") {
                cur.expect('(');
                const double k = cur.number();
                cur.expect(')');
                term = Term::control_quad(k);
            } else if (id == "state") {
                cur.expect('(');
                const double k = cur.number();
                cur.expect(')');
                term = Term::state_linear(k);
            } else if (id == "conv") {
                cur.expect('(');
                MeasureFunctional fn;
                fn.kind = FunctionalKind::convolution;
                fn.phi = parse_kernel(cur);
                cur.expect(',');
                fn.G = parse_g(cur);
                cur.expect(')');
                term = Term::functional(fn);
            } else if (id == "density" || id == "mean") {
                cur.expect('(');
                MeasureFunctional fn;
                fn.kind = id == "density" ? FunctionalKind::local_density
                                          : FunctionalKind::mean_affine;
                fn.G = parse_g(cur);
                cur.expect(')');
                term = Term::functional(fn);
            } else {
                cur.fail_here("unknown term '" + id +
                              "' (want a number, control, control(k), "
                              "control2(k), state(k), conv(kernel, G), "
                              "density(G), mean(G))");
            }
        }
        if (negative) negate_term(term, cur);
        coef.terms.push_back(term);
        first = false;
    }
    if (coef.terms.empty()) {
        cur.fail_here("empty coefficient expression");
    }
    return coef;
}

const Entry& require_key(const RawFile& raw, const std::string& section,
                         const std::string& key) {
    const auto sit = raw.sections.find(section);
    if (sit == raw.sections.end()) {
        throw ParseError(raw.name + ":1:1: missing required section [" +
                         section + "]");
    }
    const auto kit = sit->second.find(key);
    if (kit == sit->second.end()) {
        throw ParseError(raw.name + ":1:1: missing required key '" + key +
                         "' in [" + section + "]");
    }
    kit->second.used = true;
    return kit->second;
}

const Entry* optional_key(const RawFile& raw, const std::string& section,
                          const std::string& key) {
    const auto sit = raw.sections.find(section);
    if (sit == raw.sections.end()) return nullptr;
    const auto kit = sit->second.find(key);
    if (kit == sit->second.end()) return nullptr;
    kit->second.used = true;
    return &kit->second;
}

double parse_number_entry(const RawFile& raw, const Entry& entry) {
    Cursor cur{raw.name, entry.value, entry.line, entry.col, 0};
    const double v = cur.number();
    if (!cur.done()) cur.fail_here("trailing characters after number");
    return v;
}

bool parse_bool_entry(const RawFile& raw, const Entry& entry) {
    const std::string v = trim(entry.value);
    if (v == "true") return true;
    if (v == "false") return false;
    fail(raw.name, entry.line, entry.col, "expected true or false");
}

void reject_control_terms(const Coefficient& coef, const RawFile& raw,
                          const Entry& entry, const std::string& who) {
    if (coef.has_control_terms()) {
        fail(raw.name, entry.line, entry.col,
             who + " must not depend on the control");
    }
}

void reject_unused(const RawFile& raw) {
    for (const auto& [section, entries] : raw.sections) {
        for (const auto& [key, entry] : entries) {
            if (!entry.used) {
                fail(raw.name, entry.line, 1,
                     "unknown key '" + key + "' in [" + section + "]");
            }
        }
    }
}

void render_g(std::ostringstream& os, const GFunc& g) {
    switch (g.kind) {
        case GKind::identity: os << "identity"; return;
        case GKind::tanh_: os << "tanh"; return;
        case GKind::scale: os << "scale(" << fmt(g.param) << ")"; return;
        case GKind::quad: os << "quad(" << fmt(g.param) << ")"; return;
    }
}

void render_kernel(std::ostringstream& os, const Kernel& k) {
    switch (k.kind) {
        case KernelKind::identity: os << "identity"; return;
        case KernelKind::gaussian:
            os << "gaussian(" << fmt(k.param) << ")";
            return;
        case KernelKind::indicator:
            os << "indicator(" << fmt(k.param) << ")";
            return;
    }
}

std::string render_coefficient(const Coefficient& coef) {
    if (coef.terms.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const Term& t : coef.terms) {
        if (!first) os << " + ";
        first = false;
        switch (t.kind) {
            case TermKind::constant_: os << fmt(t.coef); break;
            case TermKind::control_linear:
                os << "control(" << fmt(t.coef) << ")";
                break;
            case TermKind::control_quad:
                os << "control2(" << fmt(t.coef) << ")";
                break;
            case TermKind::state_linear:
                os << "state(" << fmt(t.coef) << ")";
                break;
            case TermKind::functional:
                switch (t.func.kind) {
                    case FunctionalKind::constant:
                        os << fmt(t.func.c);
                        break;
                    case FunctionalKind::convolution:
                        os << "conv(";
                        render_kernel(os, t.func.phi);
                        os << ", ";
                        render_g(os, t.func.G);
                        os << ")";
                        break;
                    case FunctionalKind::local_density:
                        os << "density(";
                        render_g(os, t.func.G);
                        os << ")";
                        break;
                    case FunctionalKind::mean_affine:
                        os << "mean(";
                        render_g(os, t.func.G);
                        os << ")";
                        break;
                }
                break;
        }
    }
    return os.str();
}

} // namespace

ModelFile read_model_text(const std::string& text, const std::string& name) {
    const RawFile raw = split_sections(text, name);
    ModelFile out;
    MFGModel& model = out.model;

    const Entry& b_entry = require_key(raw, "dynamics", "b");
    const Entry& sigma_entry = require_key(raw, "dynamics", "sigma");
    model.coefficients.b = parse_coefficient(raw, b_entry);
    model.coefficients.sigma = parse_coefficient(raw, sigma_entry);
    reject_control_terms(model.coefficients.sigma, raw, sigma_entry, "sigma");
    model.T = parse_number_entry(raw, require_key(raw, "dynamics", "T"));

    const Entry& f_entry = require_key(raw, "cost", "f");
    const Entry& g_entry = require_key(raw, "cost", "g");
    model.coefficients.f = parse_coefficient(raw, f_entry);
    model.coefficients.g = parse_coefficient(raw, g_entry);
    reject_control_terms(model.coefficients.g, raw, g_entry, "g");

    model.a_min = parse_number_entry(raw, require_key(raw, "control", "a_min"));
    model.a_max = parse_number_entry(raw, require_key(raw, "control", "a_max"));
    if (const Entry* e = optional_key(raw, "control", "p")) {
        model.p = parse_number_entry(raw, *e);
    }
    if (const Entry* e = optional_key(raw, "control", "p_prime")) {
        model.p_prime = parse_number_entry(raw, *e);
    }
    if (const Entry* e = optional_key(raw, "control", "p_sigma")) {
        model.p_sigma = parse_number_entry(raw, *e);
    }

    // Initial law: normal(mean, variance) on the declared grid.
    const Entry& lam = require_key(raw, "dynamics", "lambda");
    Cursor cur{raw.name, lam.value, lam.line, lam.col, 0};
    if (cur.ident() != "normal") {
        cur.fail_here("initial law must be normal(mean, variance)");
    }
    cur.expect('(');
    const double lam_mean = cur.number();
    cur.expect(',');
    const double lam_var = cur.number();
    cur.expect(')');
    if (!cur.done()) cur.fail_here("trailing characters after normal(...)");
    if (!(lam_var > 0.0)) {
        fail(raw.name, lam.line, lam.col, "variance must be positive");
    }

    const double dx =
        parse_number_entry(raw, require_key(raw, "grid", "dx"));
    if (!(dx > 0.0)) {
        fail(raw.name, require_key(raw, "grid", "dx").line, 1,
             "dx must be positive");
    }
    double x_min = 0.0;
    std::size_t n = 0;
    if (optional_key(raw, "grid", "x_min") &&
        optional_key(raw, "grid", "half_range")) {
        fail(raw.name, require_key(raw, "grid", "half_range").line, 1,
             "give either half_range or x_min + n, not both");
    }
    if (const Entry* e = optional_key(raw, "grid", "x_min")) {
        x_min = parse_number_entry(raw, *e);
        const Entry& ne = require_key(raw, "grid", "n");
        const double nv = parse_number_entry(raw, ne);
        if (!(nv >= 2.0) || nv != std::floor(nv)) {
            fail(raw.name, ne.line, ne.col, "n must be an integer >= 2");
        }
        n = static_cast<std::size_t>(nv);
    } else {
        const Entry& he = require_key(raw, "grid", "half_range");
        const double half = parse_number_entry(raw, he);
        if (!(half > 0.0)) {
            fail(raw.name, he.line, he.col, "half_range must be positive");
        }
        x_min = lam_mean - half;
        n = static_cast<std::size_t>(std::llround(2.0 * half / dx)) + 1;
    }
    model.lambda = gaussian_grid(lam_mean, lam_var, x_min, dx, n);

    bool lift_eligible = false;
    if (const Entry* e = optional_key(raw, "common_noise", "b0")) {
        model.coefficients.b0 = parse_coefficient(raw, *e);
        reject_control_terms(model.coefficients.b0, raw, *e, "b0");
        lift_eligible = true;
    }
    if (const Entry* e = optional_key(raw, "common_noise", "sigma0")) {
        model.coefficients.sigma0 = parse_coefficient(raw, *e);
        reject_control_terms(model.coefficients.sigma0, raw, *e, "sigma0");
        lift_eligible = true;
    }
    if (const Entry* e = optional_key(raw, "common_noise", "lipschitz_waiver")) {
        out.lipschitz_waiver = parse_bool_entry(raw, *e);
    }

    const Entry* affine_q = optional_key(raw, "affine", "Q");
    const Entry* affine_rf = optional_key(raw, "affine", "r_f");
    const Entry* affine_rg = optional_key(raw, "affine", "r_g");

    reject_unused(raw);
    check_valid(model);

    const bool has_affine = affine_q || affine_rf || affine_rg;
    if (has_affine && !(affine_q && affine_rf && affine_rg)) {
        throw ParseError(raw.name + ":1:1: [affine] needs all of Q, r_f, r_g");
    }

    // Record invariance certificates for the state-level coefficients.
    const TISamplerConfig cfg{model.T, model.a_min, model.a_max, 2024};
    TIReport reports[4];
    reports[0] = certify(model.coefficients.b, 100, 1e-9, cfg);
    reports[1] = certify(model.coefficients.sigma, 100, 1e-9, cfg);
    reports[2] = certify(model.coefficients.f, 100, 1e-9, cfg);
    reports[3] = certify(model.coefficients.g, 100, 1e-9, cfg);

    // Aggregate terms ([common_noise]) and affine decomposition both need
    // the invariant base, so refuse such files when a certificate fails.
    if (lift_eligible || has_affine) {
        static const char* names[4] = {"b", "sigma", "f", "g"};
        for (int i = 0; i < 4; ++i) {
            if (!reports[i].pass) {
                throw CertificationError(
                    name + ": coefficient " + names[i] +
                    " is not translation invariant (violation " +
                    fmt(reports[i].max_violation) + " at " +
                    reports[i].witness +
                    "), so the file may not declare aggregate terms");
            }
        }
    }

    if (has_affine) {
        out.model = affine_decompose(model, parse_number_entry(raw, *affine_q),
                                     parse_number_entry(raw, *affine_rf),
                                     parse_number_entry(raw, *affine_rg));
    }
    return out;
}

ModelFile read_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgumentError("cannot open model file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return read_model_text(ss.str(), path);
}

MFGModel parse_model(const std::string& path) {
    return read_model_file(path).model;
}

std::string write_model_text(const MFGModel& model, bool lipschitz_waiver) {
    std::ostringstream os;
    os << "[dynamics]\n";
    os << "b = " << render_coefficient(model.coefficients.b) << "\n";
    os << "sigma = " << render_coefficient(model.coefficients.sigma) << "\n";
    os << "T = " << fmt(model.T) << "\n";
    os << "lambda = normal(" << fmt(mean(model.lambda)) << ", "
       << fmt(variance(model.lambda)) << ")\n";
    os << "\n[cost]\n";
    os << "f = " << render_coefficient(model.coefficients.f) << "\n";
    os << "g = " << render_coefficient(model.coefficients.g) << "\n";
    os << "\n[control]\n";
    os << "a_min = " << fmt(model.a_min) << "\n";
    os << "a_max = " << fmt(model.a_max) << "\n";
    os << "p = " << fmt(model.p) << "\n";
    os << "p_prime = " << fmt(model.p_prime) << "\n";
    os << "p_sigma = " << fmt(model.p_sigma) << "\n";
    os << "\n[grid]\n";
    os << "x_min = " << fmt(model.lambda.x_min) << "\n";
    os << "dx = " << fmt(model.lambda.dx) << "\n";
    os << "n = " << model.lambda.size() << "\n";
    const bool has_b0 = !model.coefficients.b0.terms.empty();
    const bool has_s0 = !model.coefficients.sigma0.terms.empty();
    if (has_b0 || has_s0 || lipschitz_waiver) {
        os << "\n[common_noise]\n";
        if (has_b0) {
            os << "b0 = " << render_coefficient(model.coefficients.b0)
               << "\n";
        }
        if (has_s0) {
            os << "sigma0 = "
               << render_coefficient(model.coefficients.sigma0) << "\n";
        }
        if (lipschitz_waiver) os << "lipschitz_waiver = true\n";
    }
    return os.str();
}

void write_model(const MFGModel& model, const std::string& path,
                 bool lipschitz_waiver) {
    std::ofstream out(path);
    if (!out) {
        throw InvalidArgumentError("cannot write model file: " + path);
    }
    out << write_model_text(model, lipschitz_waiver);
}

} // namespace mfglift
