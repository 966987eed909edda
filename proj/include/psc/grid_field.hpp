// grid_field.hpp: sampled fields on rectangular grids and their text format
//
//   # caustics-grid v1
//   # provenance: exact
//   # param hbar=0.25
//   # kind: real | complex
//   # axis x: name=q min=-2 max=2 size=64
//   # axis y: name=p min=-3 max=1 size=64
//   <row iy = 0: x values, two columns each when complex>
//   ...

#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "psc/core.hpp"

namespace psc {

struct Axis {
    std::string name;
    double min{0}, max{0};
    std::size_t size{0};

    double at(std::size_t i) const {
        if (size <= 1) return min;
        return min + (max - min) * static_cast<double>(i) / static_cast<double>(size - 1);
    }
    double spacing() const { return size > 1 ? (max - min) / static_cast<double>(size - 1) : 0.0; }
};

struct GridField {
    Axis x, y;
    bool complex_valued{false};
    std::vector<cplx> values;  // row-major: values[iy * x.size + ix]
    std::string provenance;
    std::vector<std::pair<std::string, std::string>> metadata;

    GridField() = default;
    GridField(Axis ax, Axis ay, bool is_complex = false) : x(std::move(ax)), y(std::move(ay)), complex_valued(is_complex) {
        values.assign(x.size * y.size, cplx(0.0));
    }

    cplx& operator()(std::size_t ix, std::size_t iy) { return values[iy * x.size + ix]; }
    cplx operator()(std::size_t ix, std::size_t iy) const { return values[iy * x.size + ix]; }

    void set_meta(const std::string& k, const std::string& v) {
        for (auto& kv : metadata)
            if (kv.first == k) { kv.second = v; return; }
        metadata.emplace_back(k, v);
    }
    std::string meta(const std::string& k) const {
        for (const auto& kv : metadata)
            if (kv.first == k) return kv.second;
        return {};
    }

    bool operator==(const GridField& o) const {
        auto ax_eq = [](const Axis& a, const Axis& b) {
            return a.name == b.name && a.min == b.min && a.max == b.max && a.size == b.size;
        };
        return ax_eq(x, o.x) && ax_eq(y, o.y) && complex_valued == o.complex_valued && values == o.values &&
               provenance == o.provenance && metadata == o.metadata;
    }
};

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void emit_grid(const GridField& f, std::ostream& os) {
    os << "# caustics-grid v1\n";
    os << "# provenance: " << f.provenance << "\n";
    for (const auto& [k, v] : f.metadata) os << "# param " << k << "=" << v << "\n";
    os << "# kind: " << (f.complex_valued ? "complex" : "real") << "\n";
    for (const Axis* a : {&f.x, &f.y})
        os << "# axis " << (a == &f.x ? "x" : "y") << ": name=" << a->name << " min=" << fmt17(a->min)
           << " max=" << fmt17(a->max) << " size=" << a->size << "\n";
    for (std::size_t iy = 0; iy < f.y.size; ++iy) {
        for (std::size_t ix = 0; ix < f.x.size; ++ix) {
            cplx v = f(ix, iy);
            if (ix) os << ' ';
            os << fmt17(v.real());
            if (f.complex_valued) os << ' ' << fmt17(v.imag());
        }
        os << '\n';
    }
}

inline void emit_grid(const GridField& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("IOError", "cannot open " + path + " for writing");
    emit_grid(f, os);
    if (!os) throw Error("IOError", "write failed for " + path);
}

inline GridField parse_grid(std::istream& is) {
    GridField f;
    std::string line;
    bool have_tag = false, have_x = false, have_y = false;
    auto bad = [](const std::string& w) { return Error("ParseError", "grid parse: " + w); };
    auto parse_axis = [&](const std::string& body, Axis& a) {
        std::istringstream ss(body);
        std::string tok;
        while (ss >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) throw bad("axis token " + tok);
            std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
            if (k == "name") a.name = v;
            else if (k == "min") a.min = std::stod(v);
            else if (k == "max") a.max = std::stod(v);
            else if (k == "size") a.size = std::stoull(v);
            else throw bad("axis key " + k);
        }
    };
    std::vector<double> nums;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            if (!body.empty() && body[0] == ' ') body.erase(0, 1);
            if (body == "caustics-grid v1") have_tag = true;
            else if (body.rfind("provenance: ", 0) == 0) f.provenance = body.substr(12);
            else if (body.rfind("param ", 0) == 0) {
                std::string kv = body.substr(6);
                auto eq = kv.find('=');
                if (eq == std::string::npos) throw bad("param line " + line);
                f.metadata.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
            } else if (body.rfind("kind: ", 0) == 0) {
                std::string k = body.substr(6);
                if (k == "complex") f.complex_valued = true;
                else if (k == "real") f.complex_valued = false;
                else throw bad("kind " + k);
            } else if (body.rfind("axis x: ", 0) == 0) { parse_axis(body.substr(8), f.x); have_x = true; }
            else if (body.rfind("axis y: ", 0) == 0) { parse_axis(body.substr(8), f.y); have_y = true; }
            continue;
        }
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) nums.push_back(std::strtod(tok.c_str(), nullptr));
    }
    if (!have_tag) throw bad("missing version tag");
    if (!have_x || !have_y) throw bad("missing axis");
    for (const Axis* a : {&f.x, &f.y})
        if (a->size > 1 && !(a->min < a->max)) throw bad("axis " + a->name + " is not increasing");
    std::size_t n = f.x.size * f.y.size;
    std::size_t per = f.complex_valued ? 2 : 1;
    if (nums.size() != n * per) throw bad("value count mismatch");
    f.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        f.values[i] = f.complex_valued ? cplx(nums[2 * i], nums[2 * i + 1]) : cplx(nums[i], 0.0);
    return f;
}

inline GridField parse_grid(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("IOError", "cannot open " + path);
    return parse_grid(is);
}

}  // namespace psc
