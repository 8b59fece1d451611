#pragma once

// Experiment configuration: a TOML-syntax subset (tables, dotted keys,
// numbers, booleans, strings, nested arrays) mapped onto ExperimentConfig.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "prestrain/errors.hpp"
#include "prestrain/fields.hpp"
#include "prestrain/limit2d.hpp"
#include "prestrain/material.hpp"
#include "prestrain/plate3d.hpp"
#include "prestrain/prestrain.hpp"

namespace prestrain {

struct ConfigValue {
    enum class Kind { number, boolean, string, array };
    Kind kind = Kind::number;
    double number = 0.0;
    bool boolean = false;
    std::string string;
    std::vector<ConfigValue> array;
};

/// Flat map from dotted key ("prestrain.B.kind") to value.
class ConfigDocument {
public:
    static ConfigDocument parse(std::string_view text) {
        ConfigDocument doc;
        Parser p{text, 0, 1};
        std::string table;
        while (true) {
            p.skip_blank_lines();
            if (p.eof()) break;
            if (p.peek() == '[') {
                p.advance();
                if (p.peek() == '[') p.fail("arrays of tables are not supported");
                p.skip_inline_space();
                table = p.key();
                p.skip_inline_space();
                p.expect(']');
                p.end_of_statement();
                continue;
            }
            const std::string k = p.key();
            p.skip_inline_space();
            p.expect('=');
            p.skip_inline_space();
            ConfigValue v = p.value();
            p.end_of_statement();
            const std::string full = table.empty() ? k : table + "." + k;
            if (!doc.entries_.emplace(full, std::move(v)).second) throw ConfigError("duplicate key '" + full + "'");
        }
        return doc;
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }
    const std::map<std::string, ConfigValue>& entries() const { return entries_; }

    const ConfigValue& at(const std::string& key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw ConfigError("missing key '" + key + "'");
        return it->second;
    }

    double number(const std::string& key) const {
        const auto& v = at(key);
        if (v.kind != ConfigValue::Kind::number) throw ConfigError("key '" + key + "' must be a number");
        return v.number;
    }
    double number_or(const std::string& key, double def) const { return has(key) ? number(key) : def; }

    int integer_or(const std::string& key, int def) const {
        if (!has(key)) return def;
        const double x = number(key);
        if (x != std::floor(x) || std::abs(x) > 1e9) throw ConfigError("key '" + key + "' must be an integer");
        return static_cast<int>(x);
    }

    bool boolean_or(const std::string& key, bool def) const {
        if (!has(key)) return def;
        const auto& v = at(key);
        if (v.kind != ConfigValue::Kind::boolean) throw ConfigError("key '" + key + "' must be true or false");
        return v.boolean;
    }

    std::string string_or(const std::string& key, const std::string& def) const {
        if (!has(key)) return def;
        const auto& v = at(key);
        if (v.kind != ConfigValue::Kind::string) throw ConfigError("key '" + key + "' must be a string");
        return v.string;
    }

    std::vector<double> numbers(const std::string& key) const { return as_numbers(at(key), key); }

    static std::vector<double> as_numbers(const ConfigValue& v, const std::string& key) {
        if (v.kind != ConfigValue::Kind::array) throw ConfigError("key '" + key + "' must be an array of numbers");
        std::vector<double> out;
        for (const auto& x : v.array) {
            if (x.kind != ConfigValue::Kind::number) throw ConfigError("key '" + key + "' must be an array of numbers");
            out.push_back(x.number);
        }
        return out;
    }

    std::vector<std::vector<double>> rows(const std::string& key) const {
        const auto& v = at(key);
        if (v.kind != ConfigValue::Kind::array) throw ConfigError("key '" + key + "' must be an array of arrays");
        std::vector<std::vector<double>> out;
        for (const auto& r : v.array) out.push_back(as_numbers(r, key));
        return out;
    }

private:
    struct Parser {
        std::string_view s;
        std::size_t pos;
        int line;

        bool eof() const { return pos >= s.size(); }
        char peek() const { return eof() ? '\0' : s[pos]; }
        void advance() {
            if (s[pos] == '\n') ++line;
            ++pos;
        }
        [[noreturn]] void fail(const std::string& msg) const {
            throw ConfigError("line " + std::to_string(line) + ": " + msg);
        }
        void expect(char c) {
            if (peek() != c) fail(std::string("expected '") + c + "'");
            advance();
        }
        void skip_inline_space() {
            while (!eof() && (peek() == ' ' || peek() == '\t')) advance();
        }
        void skip_comment() {
            if (peek() == '#')
                while (!eof() && peek() != '\n') advance();
        }
        void skip_blank_lines() {
            while (!eof()) {
                skip_inline_space();
                skip_comment();
                if (peek() == '\n' || peek() == '\r') advance();
                else break;
            }
        }
        /// Whitespace, newlines and comments inside arrays.
        void skip_array_space() {
            while (!eof()) {
                const char c = peek();
                if (c == ' ' || c == '\t' || c == '\n' || c == '\r') advance();
                else if (c == '#') skip_comment();
                else break;
            }
        }
        void end_of_statement() {
            skip_inline_space();
            skip_comment();
            if (peek() == '\r') advance();
            if (!eof() && peek() != '\n') fail("unexpected trailing characters");
        }
        std::string key() {
            std::string k;
            while (!eof()) {
                const char c = peek();
                if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.') {
                    k += c;
                    advance();
                } else break;
            }
            if (k.empty() || k.front() == '.' || k.back() == '.' || k.find("..") != std::string::npos)
                fail("invalid key");
            return k;
        }
        ConfigValue value() {
            ConfigValue v;
            const char c = peek();
            if (c == '"') {
                advance();
                v.kind = ConfigValue::Kind::string;
                while (true) {
                    if (eof() || peek() == '\n') fail("unterminated string");
                    char ch = peek();
                    advance();
                    if (ch == '"') break;
                    if (ch == '\\') {
                        const char e = peek();
                        advance();
                        switch (e) {
                            case 'n': ch = '\n'; break;
                            case 't': ch = '\t'; break;
                            case '"': ch = '"'; break;
                            case '\\': ch = '\\'; break;
                            default: fail("unsupported escape sequence");
                        }
                    }
                    v.string += ch;
                }
            } else if (c == '[') {
                advance();
                v.kind = ConfigValue::Kind::array;
                skip_array_space();
                while (peek() != ']') {
                    v.array.push_back(value());
                    skip_array_space();
                    if (peek() == ',') {
                        advance();
                        skip_array_space();
                    } else if (peek() != ']') {
                        fail("expected ',' or ']' in array");
                    }
                }
                advance();
            } else if (s.substr(pos, 4) == "true") {
                v.kind = ConfigValue::Kind::boolean;
                v.boolean = true;
                pos += 4;
            } else if (s.substr(pos, 5) == "false") {
                v.kind = ConfigValue::Kind::boolean;
                pos += 5;
            } else {
                std::string tok;
                while (!eof()) {
                    const char ch = peek();
                    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '+' || ch == '-' || ch == '.' || ch == '_') {
                        if (ch != '_') tok += ch;
                        advance();
                    } else break;
                }
                char* end = nullptr;
                v.number = std::strtod(tok.c_str(), &end);
                if (tok.empty() || end != tok.c_str() + tok.size() || !std::isfinite(v.number))
                    fail("invalid value '" + tok + "'");
            }
            return v;
        }
    };

    std::map<std::string, ConfigValue> entries_;
};

namespace detail {

inline Mat3 mat3_from(const std::vector<double>& v, std::size_t offset, const std::string& key) {
    if (v.size() != offset + 9) throw ConfigError("key '" + key + "': expected " + std::to_string(offset + 9) + " numbers per entry");
    Mat3 m;
    for (std::size_t i = 0; i < 9; ++i) m.a[i] = v[offset + i];
    return m;
}

inline int exponent_from(double x, const std::string& key) {
    if (x < 0.0 || x != std::floor(x)) throw ConfigError("key '" + key + "': exponents must be nonnegative integers");
    return static_cast<int>(x);
}

/// kind in {zero, constant, polynomial, trig}.
inline PlanarMatrixField parse_matrix_field(const ConfigDocument& doc, const std::string& prefix) {
    const std::string kind = doc.string_or(prefix + ".kind", "zero");
    const std::string pkey = prefix + ".params";
    if (kind == "zero") return PlanarMatrixField::zero();
    if (kind == "constant") return PlanarMatrixField::constant(mat3_from(doc.numbers(pkey), 0, pkey));
    std::vector<MatrixTerm> terms;
    if (kind == "polynomial") {
        for (const auto& r : doc.rows(pkey))
            terms.push_back({mat3_from(r, 2, pkey), Monomial{exponent_from(r.at(0), pkey), exponent_from(r.at(1), pkey)}});
    } else if (kind == "trig") {
        for (const auto& r : doc.rows(pkey)) terms.push_back({mat3_from(r, 3, pkey), PlaneWave{r.at(0), r.at(1), r.at(2)}});
    } else {
        throw ConfigError("'" + prefix + ".kind' must be one of {zero, constant, polynomial, trig}, got '" + kind + "'");
    }
    return PlanarMatrixField(std::move(terms));
}

/// kind in {zero, polynomial, trig_product}.
inline AnalyticScalarField parse_scalar_field(const ConfigDocument& doc, const std::string& prefix, const std::string& kind) {
    const std::string pkey = prefix + ".params";
    if (kind == "zero") return AnalyticScalarField::zero();
    std::vector<ScalarTerm> terms;
    if (kind == "polynomial") {
        for (const auto& r : doc.rows(pkey)) {
            if (r.size() != 3) throw ConfigError("key '" + pkey + "': polynomial terms are [px, py, coef]");
            terms.push_back({r[2], Monomial{exponent_from(r[0], pkey), exponent_from(r[1], pkey)}});
        }
    } else if (kind == "trig_product") {
        for (const auto& r : doc.rows(pkey)) {
            if (r.size() != 5) throw ConfigError("key '" + pkey + "': trig_product terms are [amplitude, k1, p1, k2, p2]");
            terms.push_back({r[0], TrigProduct{r[1], r[2], r[3], r[4]}});
        }
    } else {
        throw ConfigError("'" + prefix + ".kind' must be one of {zero, polynomial, trig_product, limit_minimizer}, got '" +
                          kind + "'");
    }
    return AnalyticScalarField(std::move(terms));
}

}  // namespace detail

struct ExperimentConfig {
    EnergyDensity material = EnergyDensity::svk(1.0, 1.0);
    PrestrainSpec prestrain{};
    /// Analytic V3 seeding the recovery sequences; empty means "use the discrete limit minimizer".
    std::optional<AnalyticScalarField> displacement;
    int n1 = 64, n2 = 64, m = 4;
    std::vector<double> hs{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
    MinimizerOptions opt{};
    bool minimize = false;
    LimitSolveOptions limit{};
    int limit_n1 = 0, limit_n2 = 0;  // 0: same as the plate grid
    bool refinement_check = true;
    std::string output_dir = "out";
    std::vector<std::string> formats{"csv"};
    std::string source;

    PlateGrid plate_grid() const { return PlateGrid(prestrain.omega, n1, n2, m); }
    int limit_grid_n1() const { return limit_n1 > 0 ? limit_n1 : n1; }
    int limit_grid_n2() const { return limit_n2 > 0 ? limit_n2 : n2; }

    void validate() const {
        material.moduli.validate();
        prestrain.validate();
        if (n1 < 3 || n2 < 3) throw ConfigError("grid.n1 and grid.n2 must be >= 3");
        if (m < 2) throw ConfigError("grid.m must be >= 2");
        if (hs.empty()) throw ConfigError("sweep.h must list at least one thickness");
        for (std::size_t i = 0; i < hs.size(); ++i) {
            if (!(hs[i] > 0.0 && hs[i] <= 0.5)) throw ConfigError("sweep.h values must lie in (0, 1/2]");
            if (i > 0 && !(hs[i] < hs[i - 1])) throw ConfigError("sweep.h values must be strictly decreasing");
        }
        if (!(opt.tol > 0.0) || opt.max_iter < 0) throw ConfigError("opt.tol must be > 0 and opt.max_iter >= 0");
        if (!(limit.cg_tol > 0.0) || limit.cg_maxiter < 1) throw ConfigError("limit.cg_tol and limit.cg_maxiter must be positive");
        if (limit_grid_n1() < 6 || limit_grid_n2() < 6) throw ConfigError("limit grid must be at least 6 x 6");
    }

    static ExperimentConfig parse(std::string_view text) {
        const ConfigDocument doc = ConfigDocument::parse(text);
        check_known_keys(doc);
        ExperimentConfig c;
        c.source = std::string(text);
        const std::string kind = doc.string_or("material.kind", "svk");
        if (parse_density_kind(kind) == DensityKind::svk)
            c.material = EnergyDensity::svk(doc.number_or("material.mu", 1.0), doc.number_or("material.lambda", 1.0));
        else
            c.material = EnergyDensity::dist2();
        c.prestrain.gamma = doc.number_or("prestrain.gamma", 3.0);
        c.prestrain.S = detail::parse_matrix_field(doc, "prestrain.S");
        c.prestrain.B = detail::parse_matrix_field(doc, "prestrain.B");
        if (doc.has("domain.rect")) {
            const auto r = doc.numbers("domain.rect");
            if (r.size() != 4) throw ConfigError("domain.rect must be [x_lo, x_hi, y_lo, y_hi]");
            c.prestrain.omega = Rect{r[0], r[1], r[2], r[3]};
        }
        const std::string dkind = doc.string_or("displacement.kind", "limit_minimizer");
        if (dkind != "limit_minimizer") c.displacement = detail::parse_scalar_field(doc, "displacement", dkind);
        c.n1 = doc.integer_or("grid.n1", c.n1);
        c.n2 = doc.integer_or("grid.n2", c.n2);
        c.m = doc.integer_or("grid.m", c.m);
        if (doc.has("sweep.h")) c.hs = doc.numbers("sweep.h");
        c.opt.tol = doc.number_or("opt.tol", c.opt.tol);
        c.opt.max_iter = doc.integer_or("opt.max_iter", c.opt.max_iter);
        c.minimize = doc.boolean_or("opt.minimize", c.minimize);
        c.limit.cg_tol = doc.number_or("limit.cg_tol", c.limit.cg_tol);
        c.limit.cg_maxiter = doc.integer_or("limit.cg_maxiter", c.limit.cg_maxiter);
        c.limit.direct = doc.boolean_or("limit.direct", c.limit.direct);
        c.limit_n1 = doc.integer_or("limit.n1", 0);
        c.limit_n2 = doc.integer_or("limit.n2", 0);
        c.refinement_check = doc.boolean_or("recovery.refinement_check", c.refinement_check);
        c.output_dir = doc.string_or("output.directory", c.output_dir);
        if (doc.has("output.formats")) {
            c.formats.clear();
            for (const auto& v : doc.at("output.formats").array) {
                if (v.kind != ConfigValue::Kind::string) throw ConfigError("output.formats must be an array of strings");
                if (v.string != "csv" && v.string != "txt") throw ConfigError("output.formats entries must be 'csv' or 'txt'");
                c.formats.push_back(v.string);
            }
        }
        c.validate();
        return c;
    }

    static ExperimentConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("io", "cannot read config file '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

private:
    static void check_known_keys(const ConfigDocument& doc) {
        static const std::set<std::string> known{
            "material.kind", "material.mu", "material.lambda", "prestrain.gamma", "prestrain.S.kind",
            "prestrain.S.params", "prestrain.B.kind", "prestrain.B.params", "domain.rect", "displacement.kind",
            "displacement.params", "grid.n1", "grid.n2", "grid.m", "sweep.h", "opt.tol", "opt.max_iter",
            "opt.minimize", "limit.cg_tol", "limit.cg_maxiter", "limit.direct", "limit.n1", "limit.n2",
            "recovery.refinement_check", "output.directory", "output.formats"};
        for (const auto& [k, v] : doc.entries())
            if (!known.count(k)) throw ConfigError("unknown key '" + k + "'");
    }
};

}  // namespace prestrain
