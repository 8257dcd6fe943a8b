#include "oma/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "oma/errors.hpp"

namespace oma {

namespace {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(std::string_view token, long line) {
    double v = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
        throw ParseError("bad numeric field '" + std::string(token) + "'", line);
    }
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

void write_time_history_csv(const std::filesystem::path& path, const TimeHistory& th) {
    auto out = open_out(path);
    out << "# fs=" << format_double(th.sample_rate_hz) << " kind="
        << (th.kind == SignalKind::Force ? "force" : "acceleration") << " nodes=";
    for (std::size_t i = 0; i < th.channel_nodes.size(); ++i) {
        if (i) out << ',';
        out << th.channel_nodes[i] + 1;
    }
    out << " seed=" << th.seed << '\n';

    std::string line;
    line.reserve(32 * th.n_channels());
    for (long i = 0; i < th.n_samples(); ++i) {
        line.clear();
        for (int c = 0; c < th.n_channels(); ++c) {
            if (c) line.push_back(',');
            line += format_double(th.samples(i, c));
        }
        line.push_back('\n');
        out << line;
    }
    if (!out) throw IoError("write failed: " + path.string());
}

TimeHistory read_time_history_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());

    std::string header;
    if (!std::getline(in, header) || header.rfind("# ", 0) != 0) {
        throw ParseError("missing '# fs=... kind=... nodes=... seed=...' header", 1);
    }

    TimeHistory th;
    std::istringstream hs(header.substr(2));
    std::string field;
    bool have_fs = false, have_kind = false, have_nodes = false;
    while (hs >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw ParseError("malformed header field '" + field + "'", 1);
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        if (key == "fs") {
            th.sample_rate_hz = parse_double(value, 1);
            have_fs = true;
        } else if (key == "kind") {
            if (value == "force") th.kind = SignalKind::Force;
            else if (value == "acceleration") th.kind = SignalKind::Acceleration;
            else throw ParseError("unknown kind '" + value + "'", 1);
            have_kind = true;
        } else if (key == "nodes") {
            std::istringstream ns(value);
            std::string tok;
            while (std::getline(ns, tok, ',')) {
                th.channel_nodes.push_back(static_cast<int>(parse_double(tok, 1)) - 1);
            }
            have_nodes = true;
        } else if (key == "seed") {
            th.seed = std::stoull(value);
        }
    }
    if (!have_fs || !have_kind || !have_nodes || th.channel_nodes.empty()) {
        throw ParseError("header must define fs, kind and nodes", 1);
    }

    const int m = static_cast<int>(th.channel_nodes.size());
    std::vector<double> values;
    values.reserve(1 << 20);
    std::string line;
    long line_no = 1;
    long rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        int fields = 0;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            values.push_back(parse_double(std::string_view(line).substr(pos, comma - pos), line_no));
            ++fields;
            pos = comma + 1;
        }
        if (fields != m) {
            throw ParseError("expected " + std::to_string(m) + " columns, got " +
                             std::to_string(fields), line_no);
        }
        ++rows;
    }
    if (rows < 2) throw ParseError("time history needs at least 2 rows", line_no);

    th.samples.resize(rows, m);
    for (long i = 0; i < rows; ++i) {
        for (int c = 0; c < m; ++c) th.samples(i, c) = values[i * m + c];
    }
    return th;
}

std::string beam_spec_to_json(const BeamSpec& spec) {
    json j;
    j["length_m"] = spec.length_m;
    j["ei"] = spec.ei;
    j["mass_per_length"] = spec.mass_per_length;
    j["n_elements"] = spec.n_elements;
    j["boundary"] = boundary_name(spec.boundary);
    j["damping_ratio"] = spec.damping_ratio;
    return j.dump(2);
}

BeamSpec beam_spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("bad beam spec JSON: ") + e.what(), 1);
    }
    BeamSpec spec;
    spec.length_m = j.at("length_m").get<double>();
    spec.ei = j.at("ei").get<double>();
    spec.mass_per_length = j.at("mass_per_length").get<double>();
    spec.n_elements = j.at("n_elements").get<int>();
    spec.boundary = boundary_from_name(j.at("boundary").get<std::string>());
    spec.damping_ratio = j.at("damping_ratio").get<double>();
    validate(spec);
    return spec;
}

void write_modal_set_csv(const std::filesystem::path& path, const ModalSet& set) {
    auto out = open_out(path);
    out << "node";
    for (double f : set.frequencies_hz) out << ',' << format_double(f);
    out << '\n';
    for (int i = 0; i < set.shapes.rows(); ++i) {
        out << i + 1;
        for (int j = 0; j < set.shapes.cols(); ++j) out << ',' << format_double(set.shapes(i, j));
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::string identified_to_json(const IdentifiedModeSet& set) {
    json j;
    j["method"] = method_name(set.method);
    if (set.reference_node >= 0) j["reference_node"] = set.reference_node + 1;
    json nodes = json::array();
    for (int n : set.channel_nodes) nodes.push_back(n + 1);
    j["channel_nodes"] = nodes;
    json modes = json::array();
    for (const auto& m : set.modes) {
        json jm;
        jm["frequency_hz"] = m.frequency_hz;
        if (m.damping_ratio.has_value()) jm["damping_ratio"] = *m.damping_ratio;
        jm["imag_fraction"] = m.imag_fraction;
        jm["flags"] = m.flags;
        json shape = json::array();
        for (int i = 0; i < m.shape.size(); ++i) shape.push_back(m.shape(i));
        jm["shape"] = shape;
        modes.push_back(std::move(jm));
    }
    j["modes"] = std::move(modes);
    return j.dump(2);
}

IdentifiedModeSet identified_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("bad identified-mode-set JSON: ") + e.what(), 1);
    }
    IdentifiedModeSet set;
    set.method = method_from_name(j.at("method").get<std::string>());
    if (j.contains("reference_node")) set.reference_node = j["reference_node"].get<int>() - 1;
    for (const auto& n : j.at("channel_nodes")) set.channel_nodes.push_back(n.get<int>() - 1);
    for (const auto& jm : j.at("modes")) {
        IdentifiedMode m;
        m.frequency_hz = jm.at("frequency_hz").get<double>();
        if (jm.contains("damping_ratio")) m.damping_ratio = jm["damping_ratio"].get<double>();
        if (jm.contains("imag_fraction")) m.imag_fraction = jm["imag_fraction"].get<double>();
        if (jm.contains("flags")) {
            for (const auto& f : jm["flags"]) m.flags.push_back(f.get<std::string>());
        }
        const auto& shape = jm.at("shape");
        m.shape.resize(static_cast<int>(shape.size()));
        for (std::size_t i = 0; i < shape.size(); ++i) {
            m.shape(static_cast<int>(i)) = shape[i].get<double>();
        }
        set.modes.push_back(std::move(m));
    }
    return set;
}

void write_identified_json(const std::filesystem::path& path, const IdentifiedModeSet& set) {
    write_text_file(path, identified_to_json(set) + "\n");
}

IdentifiedModeSet read_identified_json(const std::filesystem::path& path) {
    return identified_from_json(read_text_file(path));
}

void write_identified_shapes_csv(const std::filesystem::path& path,
                                 const IdentifiedModeSet& set) {
    auto out = open_out(path);
    out << "mode,frequency_hz";
    for (int n : set.channel_nodes) out << ",n" << n + 1;
    out << '\n';
    for (std::size_t j = 0; j < set.modes.size(); ++j) {
        const auto& m = set.modes[j];
        out << j + 1 << ',' << format_double(m.frequency_hz);
        for (int i = 0; i < m.shape.size(); ++i) out << ',' << format_double(m.shape(i));
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void write_curves_csv(const std::filesystem::path& path, const DiagnosticCurves& curves) {
    auto out = open_out(path);
    out << "frequency_hz";
    for (const auto& [name, _] : curves.columns) out << ',' << name;
    out << '\n';
    for (std::size_t k = 0; k < curves.frequencies_hz.size(); ++k) {
        out << format_double(curves.frequencies_hz[k]);
        for (const auto& [_, col] : curves.columns) {
            out << ',' << format_double(col(static_cast<int>(k)));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void write_cross_spectral_csv(const std::filesystem::path& path, const CrossSpectralMatrix& g) {
    auto out = open_out(path);
    const int m = g.n_channels();
    out << "frequency_hz";
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const int a = g.channel_nodes[i] + 1;
            const int b = g.channel_nodes[j] + 1;
            out << ",re_" << a << '_' << b << ",im_" << a << '_' << b;
        }
    }
    out << '\n';
    for (int k = 0; k < g.n_lines(); ++k) {
        out << format_double(g.frequencies_hz[k]);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                out << ',' << format_double(g.matrices[k](i, j).real()) << ','
                    << format_double(g.matrices[k](i, j).imag());
            }
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void write_anpsd_csv(const std::filesystem::path& path, const Anpsd& a) {
    auto out = open_out(path);
    out << "frequency_hz,anpsd";
    for (int c = 0; c < a.per_channel_npsd.cols(); ++c) out << ",npsd_" << c + 1;
    out << '\n';
    for (std::size_t k = 0; k < a.frequencies_hz.size(); ++k) {
        out << format_double(a.frequencies_hz[k]) << ','
            << format_double(a.values(static_cast<int>(k)));
        for (int c = 0; c < a.per_channel_npsd.cols(); ++c) {
            out << ',' << format_double(a.per_channel_npsd(static_cast<int>(k), c));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void write_mac_csv(const std::filesystem::path& path, const MacMatrix& m) {
    auto out = open_out(path);
    out << "fA_hz\\fB_hz";
    for (double f : m.frequencies_b_hz) out << ',' << format_double(f);
    out << '\n';
    for (int i = 0; i < m.values.rows(); ++i) {
        out << format_double(m.frequencies_a_hz[i]);
        for (int j = 0; j < m.values.cols(); ++j) out << ',' << format_double(m.values(i, j));
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace oma
