#include "bta/io.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "bta/errors.hpp"

namespace bta {

namespace {

constexpr int kFormatVersion = 1;

void write_block(std::ofstream& out, const char* name, int index, const DenseBlock& b, bool last)
{
    out << "    {\"name\": \"" << name << "\", \"index\": " << index << ", \"rows\": " << b.rows
        << ", \"cols\": " << b.cols << ", \"data\": [";
    for (std::size_t i = 0; i < b.data.size(); i++) {
        if (i) { out << ", "; }
        out << format_double(b.data[i]);
    }
    out << "]}" << (last ? "" : ",") << "\n";
}

DenseBlock parse_block(const nlohmann::json& j)
{
    DenseBlock b(j.at("rows").get<int>(), j.at("cols").get<int>());
    const auto& data = j.at("data");
    if (static_cast<int>(data.size()) != b.rows * b.cols) {
        throw ParseError("block '" + j.at("name").get<std::string>() + "' index " +
                         std::to_string(j.at("index").get<int>()) + ": data length " +
                         std::to_string(data.size()) + " != rows*cols");
    }
    for (std::size_t i = 0; i < data.size(); i++) { b.data[i] = data[i].get<double>(); }
    return b;
}

nlohmann::json load_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) { throw ParseError("cannot open '" + path + "'"); }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
}

} // namespace

std::string format_double(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void save_matrix(const BlockTridiagArrowMatrix& m, const std::string& path)
{
    std::ofstream out(path);
    if (!out) { throw ParseError("cannot open '" + path + "' for writing"); }
    const int M = m.num_stages();
    out << "{\n  \"version\": " << kFormatVersion << ",\n  \"M\": " << M
        << ",\n  \"n_g\": " << m.global_size << ",\n  \"stage_sizes\": [";
    for (int i = 0; i < M; i++) { out << (i ? ", " : "") << m.stage_sizes[i]; }
    out << "],\n  \"blocks\": [\n";

    const int n_blocks = M + (M - 1) + (m.global_size > 0 ? M + 1 : 0);
    int written = 0;
    for (int i = 0; i < M; i++) { write_block(out, "diag", i + 1, m.diag[i], ++written == n_blocks); }
    for (int i = 0; i + 1 < M; i++) { write_block(out, "sub", i + 1, m.sub[i], ++written == n_blocks); }
    if (m.global_size > 0) {
        for (int i = 0; i < M; i++) {
            write_block(out, "arrow", i + 1, m.arrow[i], ++written == n_blocks);
        }
        write_block(out, "corner", 0, m.corner, ++written == n_blocks);
    }
    out << "  ]\n}\n";
}

BlockTridiagArrowMatrix load_matrix(const std::string& path)
{
    const nlohmann::json j = load_json(path);
    try {
        if (j.at("version").get<int>() != kFormatVersion) {
            throw ParseError("'" + path + "': unsupported format version");
        }
        const int M = j.at("M").get<int>();
        const int ng = j.at("n_g").get<int>();
        BlockTridiagArrowMatrix m;
        m.global_size = ng;
        m.stage_sizes = j.at("stage_sizes").get<std::vector<int>>();
        if (static_cast<int>(m.stage_sizes.size()) != M) {
            throw ParseError("'" + path + "': stage_sizes length != M");
        }
        m.diag.resize(M);
        m.sub.resize(M > 0 ? M - 1 : 0);
        if (ng > 0) { m.arrow.resize(M); }
        std::vector<bool> seen_diag(M, false);
        std::vector<bool> seen_sub(M > 0 ? M - 1 : 0, false);
        std::vector<bool> seen_arrow(ng > 0 ? M : 0, false);
        bool seen_corner = false;

        for (const auto& blk : j.at("blocks")) {
            const std::string name = blk.at("name").get<std::string>();
            const int index = blk.at("index").get<int>();
            if (name == "diag") {
                if (index < 1 || index > M) { throw ParseError("diag index out of range"); }
                m.diag[index - 1] = parse_block(blk);
                seen_diag[index - 1] = true;
            } else if (name == "sub") {
                if (index < 1 || index > M - 1) { throw ParseError("sub index out of range"); }
                m.sub[index - 1] = parse_block(blk);
                seen_sub[index - 1] = true;
            } else if (name == "arrow") {
                if (ng == 0) { throw ParseError("arrow block present but n_g = 0"); }
                if (index < 1 || index > M) { throw ParseError("arrow index out of range"); }
                m.arrow[index - 1] = parse_block(blk);
                seen_arrow[index - 1] = true;
            } else if (name == "corner") {
                if (ng == 0) { throw ParseError("corner block present but n_g = 0"); }
                m.corner = parse_block(blk);
                seen_corner = true;
            } else {
                throw ParseError("unknown block name '" + name + "'");
            }
        }
        for (int i = 0; i < M; i++) {
            if (!seen_diag[i]) { throw ParseError("missing diag block " + std::to_string(i + 1)); }
        }
        for (int i = 0; i + 1 < M; i++) {
            if (!seen_sub[i]) { throw ParseError("missing sub block " + std::to_string(i + 1)); }
        }
        if (ng > 0) {
            for (int i = 0; i < M; i++) {
                if (!seen_arrow[i]) {
                    throw ParseError("missing arrow block " + std::to_string(i + 1));
                }
            }
            if (!seen_corner) { throw ParseError("missing corner block"); }
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
}

void save_vector(const BlockVector& v, const std::string& path)
{
    std::ofstream out(path);
    if (!out) { throw ParseError("cannot open '" + path + "' for writing"); }
    out << "{\n  \"version\": " << kFormatVersion << ",\n  \"M\": " << v.num_stages()
        << ",\n  \"n_g\": " << v.global.size() << ",\n  \"stage_sizes\": [";
    for (int i = 0; i < v.num_stages(); i++) {
        out << (i ? ", " : "") << v.stages[i].size();
    }
    out << "],\n  \"stages\": [\n";
    for (int i = 0; i < v.num_stages(); i++) {
        out << "    [";
        for (std::size_t k = 0; k < v.stages[i].size(); k++) {
            out << (k ? ", " : "") << format_double(v.stages[i][k]);
        }
        out << "]" << (i + 1 < v.num_stages() ? "," : "") << "\n";
    }
    out << "  ],\n  \"global\": [";
    for (std::size_t k = 0; k < v.global.size(); k++) {
        out << (k ? ", " : "") << format_double(v.global[k]);
    }
    out << "]\n}\n";
}

BlockVector load_vector(const std::string& path)
{
    const nlohmann::json j = load_json(path);
    try {
        if (j.at("version").get<int>() != kFormatVersion) {
            throw ParseError("'" + path + "': unsupported format version");
        }
        BlockVector v;
        v.stages = j.at("stages").get<std::vector<std::vector<double>>>();
        v.global = j.at("global").get<std::vector<double>>();
        if (static_cast<int>(v.stages.size()) != j.at("M").get<int>()) {
            throw ParseError("'" + path + "': stage count != M");
        }
        if (static_cast<int>(v.global.size()) != j.at("n_g").get<int>()) {
            throw ParseError("'" + path + "': global length != n_g");
        }
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
}

} // namespace bta
