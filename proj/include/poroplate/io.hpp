/**
 * @file io.hpp
 * @brief CSV tables, legacy VTK structured points and verdict files.
 */
#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "poroplate/error.hpp"
#include "poroplate/grid.hpp"

namespace poroplate {

/// Shortest decimal text that round-trips to the same double; "nan"/"inf" spelled out.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// RFC-4180 field quoting: fields with a comma, quote or line break are wrapped in quotes.
inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// Row-oriented CSV table with a provenance preamble of `#` lines.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    CsvTable& row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_.size()) throw ShapeError("csv row has " + std::to_string(cells.size()) +
                                                              " cells, expected " + std::to_string(columns_.size()));
        rows_.push_back(cells);
        return *this;
    }
    CsvTable& row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        for (double v : values) cells.push_back(format_number(v));
        return row(cells);
    }
    std::size_t size() const { return rows_.size(); }

    /// Serialized table; every header line is prefixed with "# ".
    std::string str(const std::string& header = {}) const {
        std::ostringstream os;
        std::istringstream hs(header);
        for (std::string line; std::getline(hs, line);) os << "# " << line << "\r\n";
        write_line(os, columns_);
        for (const auto& r : rows_) write_line(os, r);
        return os.str();
    }

private:
    static void write_line(std::ostream& os, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << csv_escape(cells[i]);
        os << "\r\n";
    }

    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

/// Writes text to a file, creating parent directories; throws Error if the file cannot be written.
inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path.string() + "' for writing");
    os << text;
    if (!os) throw Error("failed writing '" + path.string() + "'");
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open '" + path.string() + "' for reading");
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

/// Named nodal data for CSV and VTK output, all on the same grid.
template <class GridT>
struct NamedField {
    std::string name;
    const Field<GridT>* field;
};

/// Node table: coordinates followed by every component of every field.
inline CsvTable field_table(const std::vector<NamedField<Grid2D>>& fields) {
    if (fields.empty()) throw ShapeError("field_table: no fields");
    const Grid2D& g = fields.front().field->grid();
    std::vector<std::string> cols = {"y1", "y2"};
    for (const auto& f : fields) {
        if (!(f.field->grid() == g)) throw ShapeError("field_table: grid mismatch");
        for (int c = 0; c < f.field->components(); ++c)
            cols.push_back(f.field->components() == 1 ? f.name : f.name + std::to_string(c + 1));
    }
    CsvTable t(cols);
    for (int j = 0; j <= g.n; ++j)
        for (int i = 0; i <= g.n; ++i) {
            std::vector<double> r = {g.coord(i), g.coord(j)};
            for (const auto& f : fields)
                for (int c = 0; c < f.field->components(); ++c) r.push_back((*f.field)(g.index(i, j), c));
            t.row(r);
        }
    return t;
}

inline CsvTable field_table(const std::vector<NamedField<Grid3D>>& fields) {
    if (fields.empty()) throw ShapeError("field_table: no fields");
    const Grid3D& g = fields.front().field->grid();
    std::vector<std::string> cols = {"y1", "y2", "y3"};
    for (const auto& f : fields) {
        if (!(f.field->grid() == g)) throw ShapeError("field_table: grid mismatch");
        for (int c = 0; c < f.field->components(); ++c)
            cols.push_back(f.field->components() == 1 ? f.name : f.name + std::to_string(c + 1));
    }
    CsvTable t(cols);
    for (int k = 0; k <= g.nz; ++k)
        for (int j = 0; j <= g.n(); ++j)
            for (int i = 0; i <= g.n(); ++i) {
                std::vector<double> r = {g.base.coord(i), g.base.coord(j), g.z(k)};
                for (const auto& f : fields)
                    for (int c = 0; c < f.field->components(); ++c) r.push_back((*f.field)(g.index(i, j, k), c));
                t.row(r);
            }
    return t;
}

namespace detail {

template <class GridT>
std::string vtk_document(const std::vector<NamedField<GridT>>& fields, const std::string& title, int nx, int ny,
                         int nz, double hx, double hy, double hz, double oz) {
    std::ostringstream os;
    std::string t = title.substr(0, 255);
    for (char& c : t)
        if (c == '\n' || c == '\r') c = ' ';
    os << "# vtk DataFile Version 3.0\n" << t << "\nASCII\nDATASET STRUCTURED_POINTS\n";
    os << "DIMENSIONS " << nx << ' ' << ny << ' ' << nz << '\n';
    os << "ORIGIN 0 0 " << format_number(oz) << '\n';
    os << "SPACING " << format_number(hx) << ' ' << format_number(hy) << ' ' << format_number(hz) << '\n';
    os << "POINT_DATA " << static_cast<std::size_t>(nx) * ny * nz << '\n';
    for (const auto& f : fields) {
        const int nc = f.field->components();
        if (nc == 1) {
            os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
            for (std::size_t q = 0; q < f.field->nodes(); ++q) os << format_number((*f.field)(q)) << '\n';
        } else {
            os << "VECTORS " << f.name << " double\n";
            for (std::size_t q = 0; q < f.field->nodes(); ++q) {
                for (int c = 0; c < 3; ++c) os << (c ? " " : "") << format_number(c < nc ? (*f.field)(q, c) : 0.0);
                os << '\n';
            }
        }
    }
    return os.str();
}

}  // namespace detail

/// Legacy ASCII VTK structured-points document; node order (i fastest, then j, then k)
/// matches the library's storage, so values are written as stored.
inline std::string vtk_structured_points(const std::vector<NamedField<Grid2D>>& fields, const std::string& title) {
    if (fields.empty()) throw ShapeError("vtk: no fields");
    const Grid2D& g = fields.front().field->grid();
    for (const auto& f : fields)
        if (!(f.field->grid() == g)) throw ShapeError("vtk: grid mismatch");
    return detail::vtk_document(fields, title, g.side(), g.side(), 1, g.h, g.h, 1.0, 0.0);
}

inline std::string vtk_structured_points(const std::vector<NamedField<Grid3D>>& fields, const std::string& title) {
    if (fields.empty()) throw ShapeError("vtk: no fields");
    const Grid3D& g = fields.front().field->grid();
    for (const auto& f : fields)
        if (!(f.field->grid() == g)) throw ShapeError("vtk: grid mismatch");
    return detail::vtk_document(fields, title, g.base.side(), g.base.side(), g.nz + 1, g.h(), g.h(), g.hz, -1.0);
}

/// One acceptance verdict: `id PASS|FAIL value threshold`.
struct Verdict {
    std::string id;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;

    std::string line() const {
        return id + " " + (pass ? "PASS" : "FAIL") + " " + format_number(value) + " " + format_number(threshold);
    }
};

inline std::string verdict_text(const std::vector<Verdict>& verdicts) {
    std::string out;
    for (const auto& v : verdicts) out += v.line() + "\n";
    return out;
}

/// Parses a verdict file; blank lines and `#` lines are skipped.
inline std::vector<Verdict> parse_verdicts(const std::string& text) {
    std::vector<Verdict> out;
    std::istringstream is(text);
    int lineno = 0;
    for (std::string line; std::getline(is, line);) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        Verdict v;
        std::string status, value, threshold;
        if (!(ls >> v.id >> status >> value >> threshold) || (status != "PASS" && status != "FAIL"))
            throw ConfigError("malformed verdict line '" + line + "'", lineno);
        v.pass = status == "PASS";
        try {
            v.value = std::stod(value);
            v.threshold = std::stod(threshold);
        } catch (const std::exception&) {
            throw ConfigError("malformed verdict number in '" + line + "'", lineno);
        }
        out.push_back(v);
    }
    return out;
}

}  // namespace poroplate
