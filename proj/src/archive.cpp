#include "mfglift/archive.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mfglift/errors.hpp"
#include "mfglift/model_io.hpp"

namespace mfglift {

namespace fs = std::filesystem;

namespace {

std::string join(const std::string& dir, const char* leaf) {
    return (fs::path(dir) / leaf).string();
}

/// t-indexed scalar field on a uniform state grid, the common shape of
/// feedback.csv and value.csv.
struct FieldData {
    std::vector<double> times;
    SolverGrid grid;
    std::vector<std::vector<double>> values;
};

void write_field_csv(const std::string& path, const char* value_name,
                     const std::vector<double>& times, const SolverGrid& grid,
                     const std::vector<std::vector<double>>& values) {
    if (times.size() != values.size()) {
        throw InvalidArgumentError("archive: field has " +
                                   std::to_string(values.size()) +
                                   " slices for " + std::to_string(times.size()) +
                                   " time nodes");
    }
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw Error("archive: cannot open " + path);
    std::fprintf(f, "t,x,%s\n", value_name);
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (std::size_t j = 0; j < grid.n; ++j) {
            std::fprintf(f, "%.17g,%.17g,%.17g\n", times[k], grid.node(j),
                         values[k][j]);
        }
    }
    std::fclose(f);
}

FieldData read_field_csv(const std::string& path, const char* value_name) {
    std::ifstream in(path);
    if (!in) throw Error("archive: cannot open " + path);
    const std::string expected = std::string("t,x,") + value_name;
    std::string line;
    if (!std::getline(in, line) || line.rfind(expected, 0) != 0) {
        throw ParseError("archive: missing `" + expected + "` header in " + path);
    }
    FieldData out;
    std::vector<double> xs, vs;
    bool have_time = false;
    double t_cur = 0.0;
    std::size_t line_no = 1;
    auto emit = [&]() {
        if (xs.empty()) return;
        if (xs.size() < 2) {
            throw ParseError("archive: time block with fewer than 2 nodes in " +
                             path);
        }
        if (out.values.empty()) {
            out.grid.x_min = xs.front();
            out.grid.dx =
                (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
            out.grid.n = xs.size();
        } else if (xs.size() != out.grid.n) {
            throw ParseError("archive: ragged time blocks in " + path);
        }
        out.times.push_back(t_cur);
        out.values.push_back(vs);
        xs.clear();
        vs.clear();
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        double t, x, v;
        if (std::sscanf(line.c_str(), "%lg,%lg,%lg", &t, &x, &v) != 3) {
            throw ParseError("archive: bad row at line " +
                             std::to_string(line_no) + " of " + path);
        }
        if (!have_time || t != t_cur) {
            emit();
            t_cur = t;
            have_time = true;
        }
        xs.push_back(x);
        vs.push_back(v);
    }
    emit();
    if (out.times.empty()) {
        throw ParseError("archive: no data rows in " + path);
    }
    return out;
}

/// Three-column path file (t plus two scalar series), used by noise.csv.
void write_path_csv(const std::string& path, const char* a_name,
                    const char* b_name, const std::vector<double>& times,
                    const std::vector<double>& a, const std::vector<double>& b) {
    if (times.size() != a.size() || times.size() != b.size()) {
        throw InvalidArgumentError("archive: path series lengths disagree");
    }
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw Error("archive: cannot open " + path);
    std::fprintf(f, "t,%s,%s\n", a_name, b_name);
    for (std::size_t k = 0; k < times.size(); ++k) {
        std::fprintf(f, "%.17g,%.17g,%.17g\n", times[k], a[k], b[k]);
    }
    std::fclose(f);
}

struct PathData {
    std::vector<double> times;
    std::vector<double> a;
    std::vector<double> b;
};

PathData read_path_csv(const std::string& path, const char* a_name,
                       const char* b_name) {
    std::ifstream in(path);
    if (!in) throw Error("archive: cannot open " + path);
    const std::string expected =
        std::string("t,") + a_name + "," + b_name;
    std::string line;
    if (!std::getline(in, line) || line.rfind(expected, 0) != 0) {
        throw ParseError("archive: missing `" + expected + "` header in " + path);
    }
    PathData out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        double t, a, b;
        if (std::sscanf(line.c_str(), "%lg,%lg,%lg", &t, &a, &b) != 3) {
            throw ParseError("archive: bad row at line " +
                             std::to_string(line_no) + " of " + path);
        }
        out.times.push_back(t);
        out.a.push_back(a);
        out.b.push_back(b);
    }
    if (out.times.size() < 2) {
        throw ParseError("archive: path file needs at least 2 rows: " + path);
    }
    return out;
}

void write_meta(const std::string& path,
                const std::vector<std::pair<std::string, std::string>>& rows) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw Error("archive: cannot open " + path);
    std::fputs("key,value\n", f);
    for (const auto& [k, v] : rows) {
        std::fprintf(f, "%s,%s\n", k.c_str(), v.c_str());
    }
    std::fclose(f);
}

/// Repeated keys accumulate in order (used by the residual history).
std::multimap<std::string, std::string> read_meta(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("archive: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("key,value", 0) != 0) {
        throw ParseError("archive: missing `key,value` header in " + path);
    }
    std::multimap<std::string, std::string> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError("archive: bad meta row `" + line + "` in " + path);
        }
        out.emplace(line.substr(0, comma), line.substr(comma + 1));
    }
    return out;
}

std::string meta_value(const std::multimap<std::string, std::string>& meta,
                       const std::string& key, const std::string& path) {
    const auto it = meta.find(key);
    if (it == meta.end()) {
        throw ParseError("archive: missing meta key `" + key + "` in " + path);
    }
    return it->second;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require_kind(const std::multimap<std::string, std::string>& meta,
                  const char* want, const std::string& path) {
    const std::string kind = meta_value(meta, "kind", path);
    if (kind != want) {
        throw InvalidArgumentError("archive: expected a `" + std::string(want) +
                                   "` archive but " + path + " says `" + kind +
                                   "`");
    }
}

} // namespace

void write_ncn_archive(const NCNSolution& solution, const std::string& dir) {
    fs::create_directories(dir);
    write_model(solution.model, join(dir, "model.cfg"));
    write_flow_csv(solution.flow, join(dir, "flow.csv"));
    write_field_csv(join(dir, "feedback.csv"), "alpha", solution.feedback.times,
                    solution.feedback.grid, solution.feedback.values);
    write_field_csv(join(dir, "value.csv"), "value", solution.value.times,
                    solution.value.grid, solution.value.values);
    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("format", "1");
    rows.emplace_back("kind", "base");
    rows.emplace_back("converged", solution.converged ? "true" : "false");
    for (const double r : solution.picard_residuals) {
        rows.emplace_back("residual", fmt(r));
    }
    write_meta(join(dir, "meta.csv"), rows);
}

NCNSolution read_ncn_archive(const std::string& dir) {
    const auto meta = read_meta(join(dir, "meta.csv"));
    require_kind(meta, "base", join(dir, "meta.csv"));

    NCNSolution out;
    out.model = parse_model(join(dir, "model.cfg"));
    out.flow = read_flow_csv(join(dir, "flow.csv"));
    // The config stores the initial law by moments; the flow stores it
    // verbatim, and the solvers pin flow[0] to the initial law, so restore
    // it bitwise from there.
    out.model.lambda = out.flow.measures.front();

    const FieldData fb = read_field_csv(join(dir, "feedback.csv"), "alpha");
    out.feedback.times = fb.times;
    out.feedback.grid = fb.grid;
    out.feedback.values = fb.values;

    const FieldData val = read_field_csv(join(dir, "value.csv"), "value");
    out.value.times = val.times;
    out.value.grid = val.grid;
    out.value.values = val.values;

    out.converged = meta_value(meta, "converged", dir) == "true";
    for (auto [it, end] = meta.equal_range("residual"); it != end; ++it) {
        out.picard_residuals.push_back(std::strtod(it->second.c_str(), nullptr));
    }
    return out;
}

void write_cn_archive(const CNSolution& solution, const std::string& dir) {
    fs::create_directories(dir);
    write_model(solution.model, join(dir, "model.cfg"));
    write_flow_csv(solution.flow, join(dir, "flow.csv"));
    write_path_csv(join(dir, "noise.csv"), "noise", "shift",
                   solution.noise.times, solution.noise.values,
                   solution.shift.values);
    write_meta(join(dir, "meta.csv"),
               {{"format", "1"},
                {"kind", "aggregate"},
                {"noise_seed", std::to_string(solution.noise.seed)}});
    write_ncn_archive(solution.base, join(dir, "base"));
}

CNSolution read_cn_archive(const std::string& dir) {
    const auto meta = read_meta(join(dir, "meta.csv"));
    require_kind(meta, "aggregate", join(dir, "meta.csv"));

    CNSolution out;
    out.model = parse_model(join(dir, "model.cfg"));
    out.flow = read_flow_csv(join(dir, "flow.csv"));
    out.model.lambda = out.flow.measures.front();

    const PathData noise = read_path_csv(join(dir, "noise.csv"), "noise", "shift");
    out.noise.times = noise.times;
    out.noise.values = noise.a;
    out.noise.seed = std::stoull(meta_value(meta, "noise_seed", dir));
    out.shift.times = noise.times;
    out.shift.values = noise.b;

    out.base = read_ncn_archive(join(dir, "base"));
    return out;
}

bool is_cn_archive(const std::string& dir) {
    return fs::exists(fs::path(dir) / "noise.csv");
}

} // namespace mfglift
