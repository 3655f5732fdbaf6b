#include "polyspec/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "polyspec/models.hpp"

namespace polyspec::io {

namespace {

static_assert(std::endian::native == std::endian::little, "trace files are written in native little-endian order");

json matrix_to_json(const CMatrix& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back({m(i, j).real(), m(i, j).imag()});
    }
    return out;
}

CMatrix matrix_from_json(const json& doc, int d, const std::string& what) {
    if (!doc.is_array() || doc.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(d)) {
        throw ConfigError(what + " must list " + std::to_string(d * d) + " row-major entries");
    }
    CMatrix m(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            const json& e = doc[static_cast<std::size_t>(i * d + j)];
            if (e.is_number()) {
                m(i, j) = e.get<double>();
            } else if (e.is_array() && e.size() == 2) {
                m(i, j) = cplx(e[0].get<double>(), e[1].get<double>());
            } else {
                throw ConfigError(what + ": entries must be numbers or [re, im] pairs");
            }
        }
    }
    return m;
}

json rmatrix_to_json(const RMatrix& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

RMatrix rmatrix_from_json(const json& doc, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
    if (!doc.is_array() || doc.size() != static_cast<std::size_t>(rows)) throw ConfigError(what + " has the wrong number of rows");
    RMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = doc[static_cast<std::size_t>(i)];
        if (!row.is_array() || row.size() != static_cast<std::size_t>(cols)) throw ConfigError(what + " has a ragged row");
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!row[static_cast<std::size_t>(j)].is_number()) throw ConfigError(what + " contains a non-number");
            m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
        }
    }
    return m;
}

template <typename Fn>
auto guarded(const std::string& what, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_doubles(const std::filesystem::path& path, const std::vector<double>& v) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!out) throw ConfigError("short write to " + path.string());
}

std::vector<double> read_doubles(const std::filesystem::path& path, std::size_t expected) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw ConfigError("cannot open " + path.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != expected * sizeof(double)) {
        throw ConfigError(path.string() + " holds " + std::to_string(bytes / sizeof(double)) + " samples, sidecar says " +
                          std::to_string(expected));
    }
    in.seekg(0);
    std::vector<double> v(expected);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
    return v;
}

std::filesystem::path latent_path(const std::filesystem::path& path) {
    auto p = path;
    p.replace_extension(".latent.bin");
    return p;
}

}  // namespace

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    return guarded("malformed JSON in " + path.string(), [&] { return json::parse(in); });
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

// --- models -------------------------------------------------------------------------------

json spec_to_json(const LiouvillianSpec& spec) {
    json doc;
    doc["dimension"] = spec.hilbert.dimension;
    doc["labels"] = spec.hilbert.labels;
    doc["hamiltonian"] = matrix_to_json(spec.hamiltonian.matrix);
    doc["channels"] = json::array();
    for (const auto& ch : spec.channels) {
        doc["channels"].push_back({{"op", matrix_to_json(ch.op.matrix)}, {"label", ch.op.label}, {"rate_khz", ch.rate_khz}});
    }
    doc["measurement_op"] = matrix_to_json(spec.measurement.matrix);
    doc["measurement_label"] = spec.measurement.label;
    doc["beta_sq_khz"] = spec.beta_sq;
    return doc;
}

LiouvillianSpec spec_from_json(const json& doc) {
    return guarded("invalid model document", [&] {
        if (!doc.is_object()) throw ConfigError("model document must be a JSON object");
        if (doc.contains("preset")) {
            ParamOverrides params;
            if (doc.contains("params")) {
                for (const auto& [k, v] : doc.at("params").items()) {
                    if (!v.is_number()) throw ConfigError("preset parameter '" + k + "' must be a number");
                    params[k] = v.get<double>();
                }
            }
            return model_from_preset(doc.at("preset").get<std::string>(), params);
        }
        LiouvillianSpec spec;
        const int d = doc.at("dimension").get<int>();
        if (d < 2) throw ConfigError("dimension must be at least 2");
        if (doc.contains("labels")) {
            spec.hilbert = HilbertSpec::from_labels(doc.at("labels").get<std::vector<std::string>>());
            if (spec.hilbert.dimension != d) throw ConfigError("label count differs from dimension");
        } else {
            std::vector<std::string> labels;
            for (int i = 0; i < d; ++i) labels.push_back(std::to_string(i));
            spec.hilbert = HilbertSpec::from_labels(labels);
        }
        spec.hamiltonian = {doc.contains("hamiltonian") ? matrix_from_json(doc.at("hamiltonian"), d, "hamiltonian")
                                                        : CMatrix(CMatrix::Zero(d, d)),
                            "H"};
        if (doc.contains("channels")) {
            for (const auto& ch : doc.at("channels")) {
                Channel c;
                c.op = {matrix_from_json(ch.at("op"), d, "channel op"), ch.value("label", std::string())};
                c.rate_khz = ch.at("rate_khz").get<double>();
                spec.channels.push_back(std::move(c));
            }
        }
        spec.measurement = {matrix_from_json(doc.at("measurement_op"), d, "measurement_op"),
                            doc.value("measurement_label", std::string("A"))};
        spec.beta_sq = doc.at("beta_sq_khz").get<double>();
        spec.validate();
        return spec;
    });
}

LiouvillianSpec load_model(const std::filesystem::path& path) { return spec_from_json(read_json(path)); }

// --- traces -------------------------------------------------------------------------------

std::filesystem::path trace_sidecar(const std::filesystem::path& path) {
    auto p = path;
    p.replace_extension(".json");
    return p;
}

void write_trace(const TimeTrace& trace, const std::filesystem::path& path) {
    trace.validate();
    write_doubles(path, trace.samples);
    json side{{"dt_ms", trace.dt},
              {"n_samples", trace.samples.size()},
              {"units", trace.units},
              {"seed", trace.seed},
              {"model_hash", trace.model_hash},
              {"min_eigenvalue", trace.min_eigenvalue},
              {"latent", trace.latent.has_value()}};
    if (trace.latent) write_doubles(latent_path(path), *trace.latent);
    write_text(trace_sidecar(path), side.dump(2) + "\n");
}

TimeTrace read_trace(const std::filesystem::path& path) {
    const json side = read_json(trace_sidecar(path));
    return guarded("invalid trace sidecar", [&] {
        TimeTrace t;
        t.dt = side.at("dt_ms").get<double>();
        const auto n = side.at("n_samples").get<std::size_t>();
        if (n == 0) throw ConfigError("trace " + path.string() + " is empty");
        t.units = side.value("units", std::string("kHz"));
        t.seed = side.value("seed", std::uint64_t{0});
        t.model_hash = side.value("model_hash", std::string());
        t.min_eigenvalue = side.value("min_eigenvalue", 0.0);
        t.samples = read_doubles(path, n);
        if (side.value("latent", false)) t.latent = read_doubles(latent_path(path), n);
        t.validate();
        return t;
    });
}

// --- spectra ------------------------------------------------------------------------------

json spectrum_to_json(const SpectrumGrid& grid) {
    grid.validate();
    json doc{{"order", grid.order},
             {"source", grid.source},
             {"units", grid.units},
             {"frames", grid.frames},
             {"sample_dt_ms", grid.sample_dt},
             {"overlapping_frames", grid.overlapping_frames},
             {"axis1_rad_khz", grid.axis1},
             {"axis2_rad_khz", grid.axis2},
             {"values", rmatrix_to_json(grid.values)}};
    if (grid.imag) doc["imag"] = rmatrix_to_json(*grid.imag);
    if (grid.errors) doc["errors"] = rmatrix_to_json(*grid.errors);
    return doc;
}

SpectrumGrid spectrum_from_json(const json& doc) {
    return guarded("invalid spectrum document", [&] {
        SpectrumGrid g;
        g.order = doc.at("order").get<int>();
        g.source = doc.value("source", std::string("analytic"));
        g.units = doc.value("units", std::string("kHz"));
        g.frames = doc.value("frames", 0);
        g.sample_dt = doc.value("sample_dt_ms", 0.0);
        g.overlapping_frames = doc.value("overlapping_frames", false);
        g.axis1 = doc.at("axis1_rad_khz").get<std::vector<double>>();
        g.axis2 = doc.value("axis2_rad_khz", std::vector<double>{});
        const auto rows = static_cast<Eigen::Index>(g.axis1.size());
        const Eigen::Index cols = g.order == 2 ? 1 : static_cast<Eigen::Index>(g.axis2.size());
        g.values = rmatrix_from_json(doc.at("values"), rows, cols, "values");
        if (doc.contains("imag")) g.imag = rmatrix_from_json(doc.at("imag"), rows, cols, "imag");
        if (doc.contains("errors")) g.errors = rmatrix_from_json(doc.at("errors"), rows, cols, "errors");
        g.validate();
        return g;
    });
}

std::string spectrum_csv(const SpectrumGrid& grid) {
    std::ostringstream out;
    const bool err = grid.errors.has_value();
    const bool im = grid.imag.has_value();
    if (grid.order == 2) {
        out << "omega_rad_khz,f_khz,value" << (err ? ",error" : "") << (im ? ",imag" : "") << "\n";
    } else {
        out << "omega1_rad_khz,omega2_rad_khz,value" << (err ? ",error" : "") << (im ? ",imag" : "") << "\n";
    }
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
        for (Eigen::Index j = 0; j < grid.cols(); ++j) {
            const double w1 = grid.axis1[static_cast<std::size_t>(i)];
            if (grid.order == 2) {
                out << fmt(w1) << "," << fmt(w1 / kTwoPi);
            } else {
                out << fmt(w1) << "," << fmt(grid.axis2[static_cast<std::size_t>(j)]);
            }
            out << "," << fmt(grid.values(i, j));
            if (err) out << "," << fmt((*grid.errors)(i, j));
            if (im) out << "," << fmt((*grid.imag)(i, j));
            out << "\n";
        }
    }
    return out.str();
}

void write_spectrum(const SpectrumGrid& grid, const std::filesystem::path& path) {
    write_text(path, spectrum_to_json(grid).dump(1) + "\n");
    auto csv = path;
    csv.replace_extension(".csv");
    write_text(csv, spectrum_csv(grid));
}

SpectrumGrid read_spectrum(const std::filesystem::path& path) { return spectrum_from_json(read_json(path)); }

// --- fitting ------------------------------------------------------------------------------

FitProblem fit_problem_from_json(const json& doc, const std::filesystem::path& base_dir) {
    return guarded("invalid fit config", [&] {
        FitProblem p;
        p.model = doc.at("model").get<std::string>();
        if (doc.contains("fixed")) {
            for (const auto& [k, v] : doc.at("fixed").items()) p.fixed[k] = v.get<double>();
        }
        for (const auto& f : doc.at("free")) {
            FreeParameter fp;
            fp.name = f.at("name").get<std::string>();
            fp.lower = f.at("lower").get<double>();
            fp.upper = f.at("upper").get<double>();
            if (f.contains("initial")) fp.initial = f.at("initial").get<double>();
            p.free.push_back(std::move(fp));
        }
        for (const auto& s : doc.at("spectra")) {
            std::filesystem::path sp = s.get<std::string>();
            if (sp.is_relative()) sp = base_dir / sp;
            p.data.push_back(read_spectrum(sp));
        }
        if (doc.contains("scale")) {
            const json& s = doc.at("scale");
            p.fit_scale = s.value("fit", true);
            p.scale = s.value("value", 1.0);
            p.scale_lower = s.value("lower", p.scale_lower);
            p.scale_upper = s.value("upper", p.scale_upper);
        }
        if (doc.contains("background")) {
            const json& b = doc.at("background");
            p.fit_background = b.value("fit", true);
            p.background = b.value("value", 0.0);
        }
        const std::string w = doc.value("weighting", std::string("jackknife"));
        if (w == "jackknife") p.weighting = Weighting::jackknife;
        else if (w == "max_normalized") p.weighting = Weighting::max_normalized;
        else throw ConfigError("unknown weighting '" + w + "'");
        p.exclude_dc = doc.value("exclude_dc", true);
        p.nyquist_fraction = doc.value("nyquist_fraction", 0.8);
        if (doc.contains("budget")) {
            const json& b = doc.at("budget");
            p.max_evaluations = b.value("max_evaluations", p.max_evaluations);
            p.restarts = b.value("restarts", p.restarts);
            p.grid_points = b.value("grid_points", p.grid_points);
        }
        p.validate();
        return p;
    });
}

json fit_result_to_json(const FitResult& r) {
    auto int_keyed = [](const auto& m) {
        json o = json::object();
        for (const auto& [k, v] : m) o[std::to_string(k)] = v;
        return o;
    };
    return json{{"model", r.model},
                {"parameters", r.parameters},
                {"uncertainties", r.uncertainties},
                {"scale", r.scale},
                {"background", r.background},
                {"chi_square", int_keyed(r.chi_square)},
                {"points", int_keyed(r.points)},
                {"relative_residual", int_keyed(r.relative_residual)},
                {"objective", r.objective},
                {"covariance_labels", r.covariance_labels},
                {"covariance", rmatrix_to_json(r.covariance)},
                {"condition_number", std::isfinite(r.condition_number) ? json(r.condition_number) : json("inf")},
                {"covariance_singular", r.covariance_singular},
                {"degenerate_direction", r.degenerate_direction},
                {"converged", r.converged},
                {"evaluations", r.evaluations},
                {"message", r.message}};
}

FitResult fit_result_from_json(const json& doc) {
    return guarded("invalid fit result", [&] {
        auto int_keyed = [](const json& o, auto& m) {
            using Value = typename std::decay_t<decltype(m)>::mapped_type;
            for (const auto& [k, v] : o.items()) m[std::stoi(k)] = v.template get<Value>();
        };
        FitResult r;
        r.model = doc.at("model").get<std::string>();
        r.parameters = doc.at("parameters").get<std::map<std::string, double>>();
        r.uncertainties = doc.at("uncertainties").get<std::map<std::string, double>>();
        r.scale = doc.at("scale").get<double>();
        r.background = doc.at("background").get<double>();
        int_keyed(doc.at("chi_square"), r.chi_square);
        int_keyed(doc.at("points"), r.points);
        int_keyed(doc.at("relative_residual"), r.relative_residual);
        r.objective = doc.at("objective").get<double>();
        r.covariance_labels = doc.at("covariance_labels").get<std::vector<std::string>>();
        const auto n = static_cast<Eigen::Index>(r.covariance_labels.size());
        r.covariance = rmatrix_from_json(doc.at("covariance"), n, n, "covariance");
        const json& cn = doc.at("condition_number");
        r.condition_number = cn.is_string() ? std::numeric_limits<double>::infinity() : cn.get<double>();
        r.covariance_singular = doc.at("covariance_singular").get<bool>();
        r.degenerate_direction = doc.at("degenerate_direction").get<std::map<std::string, double>>();
        r.converged = doc.at("converged").get<bool>();
        r.evaluations = doc.at("evaluations").get<int>();
        r.message = doc.at("message").get<std::string>();
        return r;
    });
}

}  // namespace polyspec::io
