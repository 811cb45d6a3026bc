#include "blowctl/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace blowctl {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw ConfigError("write failed: " + path.string());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad number '" + s + "' in " + path.string());
    }
}

}  // namespace

void write_field_csv(const std::filesystem::path& path, const Grid& grid,
                     std::span<const double> y) {
    if (y.size() != static_cast<std::size_t>(grid.n)) {
        throw DimensionError("write_field_csv: field length does not match grid");
    }
    std::ostringstream out;
    out << "x,y\n";
    for (int i = 0; i < grid.n; ++i) {
        out << fmt_double(grid.nodes[i]) << ',' << fmt_double(y[i]) << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<double> read_field_csv(const std::filesystem::path& path, const Grid& grid) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open field file: " + path.string());
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> y;
    y.reserve(grid.n);
    int i = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cols = split_csv_line(line);
        if (cols.size() != 2) throw ConfigError("bad field row in " + path.string());
        const double x = parse_double(cols[0], path);
        if (i >= grid.n || std::fabs(x - grid.nodes[i]) > 1e-9 * (1.0 + std::fabs(x))) {
            throw ConfigError("field file " + path.string() + " does not match the grid");
        }
        y.push_back(parse_double(cols[1], path));
        ++i;
    }
    if (i != grid.n) throw ConfigError("field file " + path.string() + " has wrong length");
    return y;
}

void write_trajectory_csv(const std::filesystem::path& path, const Grid& grid,
                          const std::vector<Checkpoint>& trajectory) {
    std::ostringstream out;
    out << "t";
    for (int i = 0; i < grid.n; ++i) out << ',' << fmt_double(grid.nodes[i]);
    out << '\n';
    for (const auto& cp : trajectory) {
        out << fmt_double(cp.t);
        for (double v : cp.y) out << ',' << fmt_double(v);
        out << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<Checkpoint> read_trajectory_csv(const std::filesystem::path& path,
                                            const Grid& grid) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open trajectory file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty trajectory file: " + path.string());
    const auto header = split_csv_line(line);
    if (header.size() != static_cast<std::size_t>(grid.n) + 1) {
        throw ConfigError("trajectory file " + path.string() + " does not match the grid");
    }
    for (int i = 0; i < grid.n; ++i) {
        const double x = parse_double(header[i + 1], path);
        if (std::fabs(x - grid.nodes[i]) > 1e-9 * (1.0 + std::fabs(x))) {
            throw ConfigError("trajectory file " + path.string() + " does not match the grid");
        }
    }
    std::vector<Checkpoint> trajectory;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cols = split_csv_line(line);
        if (cols.size() != static_cast<std::size_t>(grid.n) + 1) {
            throw ConfigError("bad trajectory row in " + path.string());
        }
        Checkpoint cp;
        cp.t = parse_double(cols[0], path);
        cp.y.resize(grid.n);
        for (int i = 0; i < grid.n; ++i) cp.y[i] = parse_double(cols[i + 1], path);
        trajectory.push_back(std::move(cp));
    }
    return trajectory;
}

void write_sup_series_csv(const std::filesystem::path& path,
                          const std::vector<SupSample>& series) {
    std::ostringstream out;
    out << "t,sup,argmax_x\n";
    for (const auto& s : series) {
        out << fmt_double(s.t) << ',' << fmt_double(s.sup) << ',' << fmt_double(s.argmax_x)
            << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<SupSample> read_sup_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sup series file: " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<SupSample> series;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cols = split_csv_line(line);
        if (cols.size() != 3) throw ConfigError("bad sup series row in " + path.string());
        series.push_back(SupSample{parse_double(cols[0], path), parse_double(cols[1], path),
                                   parse_double(cols[2], path)});
    }
    return series;
}

void write_membership_csv(const std::filesystem::path& path,
                          const std::vector<MembershipRow>& rows) {
    std::ostringstream out;
    out << "s,q0,q0_bound,q1,q1_bound,q2,q2_bound,qminus,qminus_bound,qe,qe_bound,"
           "region_max,region_ok,all_pass\n";
    for (const auto& r : rows) {
        out << fmt_double(r.s) << ',' << fmt_double(r.report.q0.value) << ','
            << fmt_double(r.report.q0.bound) << ',' << fmt_double(r.report.q1.value) << ','
            << fmt_double(r.report.q1.bound) << ',' << fmt_double(r.report.q2.value) << ','
            << fmt_double(r.report.q2.bound) << ',' << fmt_double(r.report.q_minus.value) << ','
            << fmt_double(r.report.q_minus.bound) << ',' << fmt_double(r.report.q_e.value)
            << ',' << fmt_double(r.report.q_e.bound) << ',' << fmt_double(r.region_max) << ','
            << (r.region_ok ? 1 : 0) << ',' << (r.report.all_pass() && r.region_ok ? 1 : 0)
            << '\n';
    }
    write_text_file(path, out.str());
}

void write_region_csv(const std::filesystem::path& path,
                      const std::vector<RegionCheckRow>& rows) {
    std::ostringstream out;
    out << "t,pass,max_abs,slack\n";
    for (const auto& r : rows) {
        out << fmt_double(r.t) << ',' << (r.pass ? 1 : 0) << ',' << fmt_double(r.max_abs) << ','
            << fmt_double(r.slack) << '\n';
    }
    write_text_file(path, out.str());
}

void write_profile_error_csv(const std::filesystem::path& path,
                             const std::vector<ProfileErrorSample>& samples) {
    std::ostringstream out;
    out << "t,remaining,sup_err,scaled_err,window_nodes,resolved\n";
    for (const auto& s : samples) {
        out << fmt_double(s.t) << ',' << fmt_double(s.remaining) << ','
            << fmt_double(s.sup_err) << ',' << fmt_double(s.scaled_err) << ','
            << s.window_nodes << ',' << (s.resolved ? 1 : 0) << '\n';
    }
    write_text_file(path, out.str());
}

}  // namespace blowctl
