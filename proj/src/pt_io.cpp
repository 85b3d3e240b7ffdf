#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "ptspec/errors.hpp"
#include "ptspec/process_tensor.hpp"

namespace ptspec {

namespace {

constexpr char kMagic[] = "PTMPO1";
constexpr std::size_t kMagicLen = 6;
constexpr int kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw LoadError("PT file truncated in header");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

void put_double(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

double get_double(std::istream& in) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw LoadError("PT file truncated in payload");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

}  // namespace

// Layout: magic, u64 header length, JSON header, little-endian (re, im) doubles site by site.
void save_pt(const ProcessTensorMPO& pt, const std::filesystem::path& path) {
    pt.validate();
    nlohmann::ordered_json header;
    header["format_version"] = kFormatVersion;
    header["dt"] = pt.dt;
    header["n_steps"] = pt.n_steps;
    header["dkmax"] = pt.dkmax;
    header["eps_rel"] = pt.eps_rel;
    if (pt.bath) {
        header["bath"] = {{"alpha", pt.bath->alpha},
                          {"omega_c", pt.bath->omega_c},
                          {"temperature", pt.bath->temperature}};
    } else {
        header["bath"] = nullptr;
    }
    header["bond_dims"] = pt.bond_dims();
    header["endianness"] = "little";
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(kMagic, kMagicLen);
    put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& site : pt.sites) {
        for (const cplx& z : site.data()) {
            put_double(out, z.real());
            put_double(out, z.imag());
        }
    }
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ProcessTensorMPO load_pt(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    char magic[kMagicLen];
    if (!in.read(magic, kMagicLen) || std::memcmp(magic, kMagic, kMagicLen) != 0) {
        throw LoadError("'" + path.string() + "' is not a PT file");
    }
    const std::uint64_t len = get_u64(in);
    if (len > (1u << 26)) throw LoadError("PT header too large");
    std::string text(len, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw LoadError("PT header truncated");

    ProcessTensorMPO pt;
    std::vector<std::size_t> bonds;
    try {
        const auto header = nlohmann::json::parse(text);
        if (header.at("format_version").get<int>() != kFormatVersion) {
            throw LoadError("unsupported PT format version");
        }
        if (header.at("endianness").get<std::string>() != "little") {
            throw LoadError("unsupported PT endianness");
        }
        pt.dt = header.at("dt").get<double>();
        pt.n_steps = header.at("n_steps").get<std::size_t>();
        pt.dkmax = header.at("dkmax").get<std::size_t>();
        pt.eps_rel = header.at("eps_rel").get<double>();
        if (!header.at("bath").is_null()) {
            const auto& b = header.at("bath");
            pt.bath = BathSpec{b.at("alpha").get<double>(), b.at("omega_c").get<double>(),
                               b.at("temperature").get<double>()};
        }
        bonds = header.at("bond_dims").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("malformed PT header: ") + e.what());
    }
    if (pt.n_steps == 0 || bonds.size() != pt.n_steps + 1) {
        throw LoadError("PT header bond_dims do not match n_steps");
    }
    if (bonds.front() != 1 || bonds.back() != 1) throw LoadError("PT outer bonds must be 1");

    // Payload size must match the declared bonds exactly.
    const auto payload_start = in.tellg();
    in.seekg(0, std::ios::end);
    const auto payload_bytes = static_cast<std::uint64_t>(in.tellg() - payload_start);
    in.seekg(payload_start);
    std::uint64_t expected = 0;
    for (std::size_t m = 0; m < pt.n_steps; ++m) {
        if (bonds[m] == 0 || bonds[m] > (1u << 20)) throw LoadError("PT bond dimension out of range");
        expected += static_cast<std::uint64_t>(bonds[m]) * bonds[m + 1] * kLiouvilleDim *
                    kLiouvilleDim * 16;
    }
    if (expected != payload_bytes) throw LoadError("PT payload size does not match declared bond dims");

    pt.sites.reserve(pt.n_steps);
    for (std::size_t m = 0; m < pt.n_steps; ++m) {
        ComplexTensor site({bonds[m], kLiouvilleDim, bonds[m + 1], kLiouvilleDim});
        for (cplx& z : site.data()) {
            const double re = get_double(in);
            const double im = get_double(in);
            z = cplx(re, im);
        }
        pt.sites.push_back(std::move(site));
    }
    try {
        pt.validate();
    } catch (const ValidationError& e) {
        throw LoadError(std::string("invalid PT file: ") + e.what());
    }
    return pt;
}

}  // namespace ptspec
