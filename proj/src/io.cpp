#include "io.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "../vendor/json.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace pidlab {

namespace {

using nlohmann::json;

void write_bytes(std::ofstream& out, const void* p, std::size_t n, const std::string& path) {
    out.write(static_cast<const char*>(p), std::streamsize(n));
    if (!out) throw io_error("write failed: " + path);
}

void read_bytes(std::ifstream& in, void* p, std::size_t n, const std::string& path) {
    in.read(static_cast<char*>(p), std::streamsize(n));
    if (in.gcount() != std::streamsize(n)) throw io_error("truncated file: " + path);
}

template <typename T>
void write_pod(std::ofstream& out, T v, const std::string& path) {
    write_bytes(out, &v, sizeof(T), path);
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v;
    read_bytes(in, &v, sizeof(T), path);
    return v;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    return in;
}

// splits one CSV line; no quoting, the formats never need it
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_double(const std::string& s, const std::string& path) {
    const char* c = s.c_str();
    char* end = nullptr;
    double v = std::strtod(c, &end);
    if (end == c || *end != '\0') throw io_error("bad number '" + s + "' in " + path);
    return v;
}

long parse_int(const std::string& s, const std::string& path) {
    const char* c = s.c_str();
    char* end = nullptr;
    long v = std::strtol(c, &end, 10);
    if (end == c || *end != '\0') throw io_error("bad integer '" + s + "' in " + path);
    return v;
}

std::string trim_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

constexpr std::uint32_t kBinaryVersion = 1;

json pid_to_json(const PidResult& p) {
    json j;
    j["log_base"] = p.base == LogBase::bits ? "bits" : "nats";
    j["r"] = p.r;
    j["u1"] = p.u1;
    j["u2"] = p.u2;
    j["s"] = p.s;
    j["total_mi"] = p.total_mi;
    return j;
}

PidResult pid_from_json(const json& j) {
    PidResult p;
    std::string base = j.at("log_base").get<std::string>();
    if (base == "bits")
        p.base = LogBase::bits;
    else if (base == "nats")
        p.base = LogBase::nats;
    else
        throw std::invalid_argument("registry: unknown log_base '" + base + "'");
    p.r = j.at("r").get<double>();
    p.u1 = j.at("u1").get<double>();
    p.u2 = j.at("u2").get<double>();
    if (j.at("s").is_null()) {
        p.s = std::numeric_limits<double>::quiet_NaN();
        p.diag.s_present = false;
    } else {
        p.s = j.at("s").get<double>();
    }
    p.total_mi = j.at("total_mi").get<double>();
    return p;
}

}  // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw io_error("read failed: " + path);
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out = open_out(path);
    write_bytes(out, content.data(), content.size(), path);
}

FeatureDataset load_features(const std::string& path) {
    std::ifstream in = open_in(path);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    if (in.gcount() == 4 && std::memcmp(magic, "PIDF", 4) == 0) {
        FeatureDataset d;
        std::uint32_t version = read_pod<std::uint32_t>(in, path);
        if (version != kBinaryVersion) throw io_error("unsupported PIDF version in " + path);
        d.n = read_pod<std::int64_t>(in, path);
        d.d1 = read_pod<std::int32_t>(in, path);
        d.d2 = read_pod<std::int32_t>(in, path);
        d.classes = read_pod<std::int32_t>(in, path);
        if (d.n < 1 || d.d1 < 1 || d.d2 < 1 || d.classes < 1 || d.n > (1L << 40))
            throw io_error("bad PIDF header in " + path);
        d.x1.resize(std::size_t(d.n) * d.d1);
        d.x2.resize(std::size_t(d.n) * d.d2);
        d.y.resize(std::size_t(d.n));
        read_bytes(in, d.x1.data(), d.x1.size() * sizeof(double), path);
        read_bytes(in, d.x2.data(), d.x2.size() * sizeof(double), path);
        std::vector<std::int32_t> labels(std::size_t(d.n));
        read_bytes(in, labels.data(), labels.size() * sizeof(std::int32_t), path);
        for (long i = 0; i < d.n; ++i) d.y[std::size_t(i)] = labels[std::size_t(i)];
        try {
            d.validate();
        } catch (const std::invalid_argument& e) {
            throw io_error(std::string(e.what()) + " in " + path);
        }
        return d;
    }

    in.clear();
    in.seekg(0);
    std::string header;
    if (!std::getline(in, header)) throw io_error("empty dataset file: " + path);
    header = trim_cr(header);
    FeatureDataset d;
    int version = 0;
    if (std::sscanf(header.c_str(), "#pidlab-features v%d d1=%d d2=%d classes=%d", &version, &d.d1,
                    &d.d2, &d.classes) != 4 ||
        version != 1)
        throw io_error("bad features header in " + path);
    std::string line;
    while (std::getline(in, line)) {
        line = trim_cr(line);
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv(line);
        if (int(cells.size()) != d.d1 + d.d2 + 1)
            throw io_error("wrong column count in " + path);
        for (int j = 0; j < d.d1; ++j) d.x1.push_back(parse_double(cells[std::size_t(j)], path));
        for (int j = 0; j < d.d2; ++j)
            d.x2.push_back(parse_double(cells[std::size_t(d.d1 + j)], path));
        d.y.push_back(int(parse_int(cells[std::size_t(d.d1 + d.d2)], path)));
        ++d.n;
    }
    if (d.n == 0) throw io_error("empty dataset file: " + path);
    try {
        d.validate();
    } catch (const std::invalid_argument& e) {
        throw io_error(std::string(e.what()) + " in " + path);
    }
    return d;
}

void save_features_text(const FeatureDataset& d, const std::string& path) {
    d.validate();
    std::ofstream out = open_out(path);
    std::string buf = "#pidlab-features v1 d1=" + std::to_string(d.d1) +
                      " d2=" + std::to_string(d.d2) + " classes=" + std::to_string(d.classes) +
                      "\n";
    for (long i = 0; i < d.n; ++i) {
        for (int j = 0; j < d.d1; ++j) {
            buf += fmt_double(d.row1(i)[j]);
            buf += ',';
        }
        for (int j = 0; j < d.d2; ++j) {
            buf += fmt_double(d.row2(i)[j]);
            buf += ',';
        }
        buf += std::to_string(d.y[std::size_t(i)]);
        buf += '\n';
        if (buf.size() > (1u << 20)) {
            write_bytes(out, buf.data(), buf.size(), path);
            buf.clear();
        }
    }
    write_bytes(out, buf.data(), buf.size(), path);
}

void save_features_binary(const FeatureDataset& d, const std::string& path) {
    d.validate();
    std::ofstream out = open_out(path);
    write_bytes(out, "PIDF", 4, path);
    write_pod<std::uint32_t>(out, kBinaryVersion, path);
    write_pod<std::int64_t>(out, d.n, path);
    write_pod<std::int32_t>(out, d.d1, path);
    write_pod<std::int32_t>(out, d.d2, path);
    write_pod<std::int32_t>(out, d.classes, path);
    write_bytes(out, d.x1.data(), d.x1.size() * sizeof(double), path);
    write_bytes(out, d.x2.data(), d.x2.size() * sizeof(double), path);
    std::vector<std::int32_t> labels(std::size_t(d.n));
    for (long i = 0; i < d.n; ++i) labels[std::size_t(i)] = d.y[std::size_t(i)];
    write_bytes(out, labels.data(), labels.size() * sizeof(std::int32_t), path);
}

DiscreteDataset load_discrete(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string header;
    if (!std::getline(in, header)) throw io_error("empty dataset file: " + path);
    header = trim_cr(header);
    DiscreteDataset d;
    int version = 0;
    if (std::sscanf(header.c_str(), "#pidlab-discrete v%d k1=%d k2=%d classes=%d", &version, &d.k1,
                    &d.k2, &d.classes) != 4 ||
        version != 1)
        throw io_error("bad discrete header in " + path);
    std::string line;
    while (std::getline(in, line)) {
        line = trim_cr(line);
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv(line);
        if (cells.size() != 3) throw io_error("wrong column count in " + path);
        d.c1.push_back(int(parse_int(cells[0], path)));
        d.c2.push_back(int(parse_int(cells[1], path)));
        d.y.push_back(int(parse_int(cells[2], path)));
        ++d.n;
    }
    if (d.n == 0) throw io_error("empty dataset file: " + path);
    try {
        d.validate();
    } catch (const std::invalid_argument& e) {
        throw io_error(std::string(e.what()) + " in " + path);
    }
    return d;
}

void save_discrete(const DiscreteDataset& d, const std::string& path) {
    d.validate();
    std::ofstream out = open_out(path);
    std::string buf = "#pidlab-discrete v1 k1=" + std::to_string(d.k1) +
                      " k2=" + std::to_string(d.k2) + " classes=" + std::to_string(d.classes) +
                      "\n";
    for (long i = 0; i < d.n; ++i) {
        buf += std::to_string(d.c1[std::size_t(i)]);
        buf += ',';
        buf += std::to_string(d.c2[std::size_t(i)]);
        buf += ',';
        buf += std::to_string(d.y[std::size_t(i)]);
        buf += '\n';
        if (buf.size() > (1u << 20)) {
            write_bytes(out, buf.data(), buf.size(), path);
            buf.clear();
        }
    }
    write_bytes(out, buf.data(), buf.size(), path);
}

bool TensorMap::has(const std::string& key) const {
    for (const auto& [k, t] : items)
        if (k == key) return true;
    return false;
}

const DenseTensor& TensorMap::get(const std::string& key) const {
    for (const auto& [k, t] : items)
        if (k == key) return t;
    throw std::invalid_argument("TensorMap: missing key '" + key + "'");
}

void TensorMap::put(const std::string& key, DenseTensor t) {
    if (key.empty() || key.size() > 0xFFFF) throw std::invalid_argument("TensorMap: bad key");
    if (has(key)) throw std::invalid_argument("TensorMap: duplicate key '" + key + "'");
    items.emplace_back(key, std::move(t));
}

double TensorMap::scalar(const std::string& key) const {
    const DenseTensor& t = get(key);
    if (t.size() != 1) throw std::invalid_argument("TensorMap: '" + key + "' is not a scalar");
    return t.v[0];
}

void save_tensors(const TensorMap& m, const std::string& path) {
    std::ofstream out = open_out(path);
    write_bytes(out, "PIDC", 4, path);
    write_pod<std::uint32_t>(out, kBinaryVersion, path);
    write_pod<std::uint32_t>(out, std::uint32_t(m.items.size()), path);
    for (const auto& [key, t] : m.items) {
        write_pod<std::uint16_t>(out, std::uint16_t(key.size()), path);
        write_bytes(out, key.data(), key.size(), path);
        write_pod<std::uint32_t>(out, std::uint32_t(t.shape.size()), path);
        for (int dim : t.shape) write_pod<std::int32_t>(out, dim, path);
        write_bytes(out, t.v.data(), t.v.size() * sizeof(double), path);
    }
}

TensorMap load_tensors(const std::string& path) {
    std::ifstream in = open_in(path);
    char magic[4];
    read_bytes(in, magic, 4, path);
    if (std::memcmp(magic, "PIDC", 4) != 0) throw io_error("not a checkpoint file: " + path);
    std::uint32_t version = read_pod<std::uint32_t>(in, path);
    if (version != kBinaryVersion) throw io_error("unsupported checkpoint version in " + path);
    std::uint32_t count = read_pod<std::uint32_t>(in, path);
    if (count > 0xFFFF) throw io_error("implausible entry count in " + path);
    TensorMap m;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint16_t klen = read_pod<std::uint16_t>(in, path);
        std::string key(klen, '\0');
        read_bytes(in, key.data(), klen, path);
        std::uint32_t ndim = read_pod<std::uint32_t>(in, path);
        if (ndim < 1 || ndim > 3) throw io_error("bad tensor rank in " + path);
        std::vector<int> shape(ndim);
        std::size_t total = 1;
        for (std::uint32_t a = 0; a < ndim; ++a) {
            std::int32_t dim = read_pod<std::int32_t>(in, path);
            if (dim < 1 || dim > (1 << 28)) throw io_error("bad tensor axis in " + path);
            shape[a] = dim;
            total *= std::size_t(dim);
            if (total > (std::size_t(1) << 30)) throw io_error("tensor too large in " + path);
        }
        DenseTensor t(shape);
        read_bytes(in, t.v.data(), t.v.size() * sizeof(double), path);
        try {
            m.put(key, std::move(t));
        } catch (const std::invalid_argument& e) {
            throw io_error(std::string(e.what()) + " in " + path);
        }
    }
    return m;
}

TensorMap pack_fusion(const FusionModel& m, const TrainConfig& cfg) {
    TensorMap t;
    DenseTensor kind({1});
    kind.v[0] = double(int(m.kind));
    t.put("model.kind", std::move(kind));
    DenseTensor dims({3});
    dims.v = {double(m.d1), double(m.d2), double(m.classes)};
    t.put("model.dims", std::move(dims));
    DenseTensor conf({3});
    conf.v = {cfg.lr, double(cfg.epochs), double(cfg.batch)};
    t.put("config.train", std::move(conf));
    DenseTensor seed({2});
    seed.v = {double(cfg.seed >> 32), double(cfg.seed & 0xFFFFFFFFULL)};
    t.put("config.seed", std::move(seed));
    if (int(m.mean1.size()) != m.d1 || int(m.mean2.size()) != m.d2)
        throw std::invalid_argument("pack_fusion: model carries no training means");
    DenseTensor m1({m.d1});
    m1.v = m.mean1;
    t.put("model.mean1", std::move(m1));
    DenseTensor m2({m.d2});
    m2.v = m.mean2;
    t.put("model.mean2", std::move(m2));
    for (std::size_t i = 0; i < m.encoders.size(); ++i) {
        std::string p = "enc" + std::to_string(i);
        t.put(p + ".w", m.encoders[i].w);
        t.put(p + ".b", m.encoders[i].b);
    }
    for (std::size_t i = 0; i < m.heads.size(); ++i) {
        std::string p = "head" + std::to_string(i);
        t.put(p + ".w1", m.heads[i].w1);
        t.put(p + ".b1", m.heads[i].b1);
        t.put(p + ".w2", m.heads[i].w2);
        t.put(p + ".b2", m.heads[i].b2);
    }
    return t;
}

FusionModel unpack_fusion(const TensorMap& t, TrainConfig* cfg_out) {
    FusionModel m;
    int kind_idx = int(t.scalar("model.kind"));
    if (kind_idx < 0 || kind_idx > int(FusionKind::unimodal_x2))
        throw std::invalid_argument("checkpoint: unknown fusion kind index");
    m.kind = FusionKind(kind_idx);
    const DenseTensor& dims = t.get("model.dims");
    if (dims.size() != 3) throw std::invalid_argument("checkpoint: bad model.dims");
    m.d1 = int(dims.v[0]);
    m.d2 = int(dims.v[1]);
    m.classes = int(dims.v[2]);
    if (m.d1 < 1 || m.d2 < 1 || m.classes < 1)
        throw std::invalid_argument("checkpoint: bad model dimensions");
    if (cfg_out) {
        const DenseTensor& conf = t.get("config.train");
        if (conf.size() != 3) throw std::invalid_argument("checkpoint: bad config.train");
        cfg_out->lr = conf.v[0];
        cfg_out->epochs = int(conf.v[1]);
        cfg_out->batch = int(conf.v[2]);
        const DenseTensor& seed = t.get("config.seed");
        if (seed.size() != 2) throw std::invalid_argument("checkpoint: bad config.seed");
        cfg_out->seed = (std::uint64_t(seed.v[0]) << 32) | std::uint64_t(seed.v[1]);
    }
    m.mean1 = t.get("model.mean1").v;
    m.mean2 = t.get("model.mean2").v;
    if (int(m.mean1.size()) != m.d1 || int(m.mean2.size()) != m.d2)
        throw std::invalid_argument("checkpoint: training means disagree with dimensions");
    int n_enc = m.kind == FusionKind::additive || m.kind == FusionKind::elementwise ||
                        m.kind == FusionKind::tensor
                    ? 2
                    : 1;
    int n_head = m.kind == FusionKind::additive ? 2 : 1;
    for (int i = 0; i < n_enc; ++i) {
        std::string p = "enc" + std::to_string(i);
        AffineParams enc;
        enc.w = t.get(p + ".w");
        enc.b = t.get(p + ".b");
        if (enc.w.ndim() != 2 || enc.b.ndim() != 1 || enc.w.cols() != enc.b.shape[0])
            throw std::invalid_argument("checkpoint: bad encoder shapes");
        m.encoders.push_back(std::move(enc));
    }
    for (int i = 0; i < n_head; ++i) {
        std::string p = "head" + std::to_string(i);
        HeadParams h;
        h.w1 = t.get(p + ".w1");
        h.b1 = t.get(p + ".b1");
        h.w2 = t.get(p + ".w2");
        h.b2 = t.get(p + ".b2");
        if (h.w1.ndim() != 2 || h.w2.ndim() != 2 || h.w1.cols() != h.b1.shape[0] ||
            h.w2.cols() != h.b2.shape[0] || h.w2.shape[0] != h.w1.cols() ||
            h.w2.cols() != m.classes)
            throw std::invalid_argument("checkpoint: bad head shapes");
        m.heads.push_back(std::move(h));
    }
    return m;
}

std::vector<RegistryEntry> load_registry(const std::string& path) {
    std::string text = read_text_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument("registry: " + std::string(e.what()));
    }
    try {
        if (j.at("format").get<std::string>() != "pidlab-registry")
            throw std::invalid_argument("registry: wrong format tag");
        if (j.at("version").get<int>() != 1)
            throw std::invalid_argument("registry: unsupported version");
        std::vector<RegistryEntry> reg;
        for (const json& je : j.at("entries")) {
            RegistryEntry e;
            e.dataset_id = je.at("dataset").get<std::string>();
            e.dataset_pid = pid_from_json(je.at("pid"));
            for (const json& jm : je.at("models")) {
                ModelRecord m;
                m.name = jm.at("name").get<std::string>();
                m.accuracy = jm.at("accuracy").get<double>();
                m.pid = pid_from_json(jm.at("pid"));
                e.models.push_back(std::move(m));
            }
            e.validate();
            reg.push_back(std::move(e));
        }
        return reg;
    } catch (const json::exception& e) {
        throw std::invalid_argument("registry: " + std::string(e.what()));
    }
}

void save_registry(const std::vector<RegistryEntry>& reg, const std::string& path) {
    json j;
    j["format"] = "pidlab-registry";
    j["version"] = 1;
    j["entries"] = json::array();
    for (const RegistryEntry& e : reg) {
        e.validate();
        json je;
        je["dataset"] = e.dataset_id;
        je["pid"] = pid_to_json(e.dataset_pid);
        je["models"] = json::array();
        for (const ModelRecord& m : e.models) {
            json jm;
            jm["name"] = m.name;
            jm["accuracy"] = m.accuracy;
            jm["pid"] = pid_to_json(m.pid);
            je["models"].push_back(std::move(jm));
        }
        j["entries"].push_back(std::move(je));
    }
    write_text_file(path, j.dump(2) + "\n");
}

std::string json_num(double v) {
    if (!std::isfinite(v)) return "null";
    if (v == 0.0) v = 0.0;  // normalizes negative zero
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string render_report(const PidResult& res, const std::string& method,
                          const std::string& input_path, long n, int dim1, int dim2) {
    std::string o;
    o += "{\n";
    o += "  \"method\": \"" + json_escape(method) + "\",\n";
    o += std::string("  \"log_base\": \"") + (res.base == LogBase::bits ? "bits" : "nats") +
         "\",\n";
    o += "  \"r\": " + json_num(res.r) + ",\n";
    o += "  \"u1\": " + json_num(res.u1) + ",\n";
    o += "  \"u2\": " + json_num(res.u2) + ",\n";
    o += "  \"s\": " + json_num(res.s) + ",\n";
    o += "  \"total_mi\": " + json_num(res.total_mi) + ",\n";
    o += "  \"diagnostics\": {\n";
    o += "    \"iterations\": " + std::to_string(res.diag.iterations) + ",\n";
    o += "    \"objective\": " + json_num(res.diag.objective) + ",\n";
    o += "    \"residual\": " + json_num(res.diag.residual) + ",\n";
    o += std::string("    \"converged\": ") + (res.diag.converged ? "true" : "false") + ",\n";
    o += "    \"min_raw_component\": " + json_num(res.diag.min_raw_component) + "\n";
    o += "  },\n";
    o += "  \"inputs\": {\n";
    o += "    \"path\": \"" + json_escape(input_path) + "\",\n";
    o += "    \"n\": " + std::to_string(n) + ",\n";
    o += "    \"dims\": [" + std::to_string(dim1) + ", " + std::to_string(dim2) + "]\n";
    o += "  }\n";
    o += "}\n";
    return o;
}

PidResult parse_report(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument("report: " + std::string(e.what()));
    }
    try {
        PidResult p = pid_from_json(j);
        if (j.contains("diagnostics")) {
            const json& d = j.at("diagnostics");
            p.diag.iterations = d.value("iterations", 0L);
            p.diag.objective = d.value("objective", 0.0);
            p.diag.residual = d.value("residual", 0.0);
            p.diag.converged = d.value("converged", true);
            p.diag.min_raw_component = d.value("min_raw_component", 0.0);
        }
        return p;
    } catch (const json::exception& e) {
        throw std::invalid_argument("report: " + std::string(e.what()));
    }
}

std::string render_selection(const SelectionResult& sel) {
    std::string o;
    o += "{\n";
    o += "  \"nearest_dataset\": \"" + json_escape(sel.dataset_id) + "\",\n";
    o += "  \"similarity\": " + json_num(sel.similarity) + ",\n";
    o += "  \"recommendations\": [";
    for (std::size_t i = 0; i < sel.recommendations.size(); ++i) {
        if (i) o += ",";
        o += "\n    {\"model\": \"" + json_escape(sel.recommendations[i].name) +
             "\", \"accuracy\": " + json_num(sel.recommendations[i].accuracy) + "}";
    }
    o += sel.recommendations.empty() ? "]\n" : "\n  ]\n";
    o += "}\n";
    return o;
}

}  // namespace pidlab
