#include "qlert/mesh_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qlert/error.hpp"

namespace qlert {

namespace {

// Reads non-empty, comment-stripped lines and splits them into tokens.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    // Next content line; false at end of input.
    bool next(std::vector<std::string>& tokens) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            std::istringstream ss(line);
            tokens.clear();
            for (std::string t; ss >> t;) tokens.push_back(t);
            if (!tokens.empty()) return true;
        }
        return false;
    }

    void expect(std::vector<std::string>& tokens, const char* what) {
        if (!next(tokens)) throw ParseError(std::string("unexpected end of file, expected ") + what, line_no_ + 1);
    }

    std::size_t line() const { return line_no_; }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

template <class T>
T parse_number(const std::string& s, std::size_t line, const char* what) {
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("invalid " + std::string(what) + " '" + s + "'", line);
    return value;
}

std::size_t parse_section(LineReader& reader, const char* keyword) {
    std::vector<std::string> tokens;
    reader.expect(tokens, keyword);
    if (tokens.size() != 2 || tokens[0] != keyword)
        throw ParseError(std::string("expected '") + keyword + " <count>'", reader.line());
    long n = parse_number<long>(tokens[1], reader.line(), "count");
    if (n < 0) throw ParseError("negative count", reader.line());
    return static_cast<std::size_t>(n);
}

void check_fields(const std::vector<std::string>& tokens, std::size_t want, LineReader& reader, const char* what) {
    if (tokens.size() != want)
        throw ParseError(std::string(what) + " line needs " + std::to_string(want) + " fields, got " +
                             std::to_string(tokens.size()),
                         reader.line());
}

int parse_node_index(const std::string& s, std::size_t node_count, std::size_t line) {
    long v = parse_number<long>(s, line, "node index");
    if (v < 0 || static_cast<std::size_t>(v) >= node_count)
        throw ParseError("node index " + s + " out of range [0, " + std::to_string(node_count) + ")", line);
    return static_cast<int>(v);
}

}  // namespace

void write_mesh(std::ostream& out, const Mesh& mesh) {
    out << "qlmesh 1\n";
    out << "nodes " << mesh.node_count() << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& p : mesh.nodes()) out << p.x << ' ' << p.y << '\n';
    out << "elements " << mesh.element_count() << '\n';
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const auto& t = mesh.element(e);
        out << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << mesh.region(e) << '\n';
    }
    out << "boundary " << mesh.boundary_edges().size() << '\n';
    for (const auto& b : mesh.boundary_edges()) out << b.a << ' ' << b.b << ' ' << b.electrode << '\n';
}

Mesh read_mesh(std::istream& in) {
    LineReader reader(in);
    std::vector<std::string> tokens;
    if (!reader.next(tokens)) throw ParseError("empty mesh file", 1);
    if (tokens.size() != 2 || tokens[0] != "qlmesh") throw ParseError("missing 'qlmesh 1' header", reader.line());
    if (tokens[1] != "1") throw ParseError("unsupported mesh format version " + tokens[1], reader.line());

    const std::size_t n_nodes = parse_section(reader, "nodes");
    std::vector<Point2> nodes(n_nodes);
    for (auto& p : nodes) {
        reader.expect(tokens, "node coordinates");
        check_fields(tokens, 2, reader, "node");
        p = {parse_number<double>(tokens[0], reader.line(), "coordinate"),
             parse_number<double>(tokens[1], reader.line(), "coordinate")};
    }

    const std::size_t n_elements = parse_section(reader, "elements");
    std::vector<Triangle> elements(n_elements);
    std::vector<int> regions(n_elements);
    for (std::size_t e = 0; e < n_elements; ++e) {
        reader.expect(tokens, "element");
        check_fields(tokens, 4, reader, "element");
        for (std::size_t k = 0; k < 3; ++k) elements[e][k] = parse_node_index(tokens[k], n_nodes, reader.line());
        regions[e] = parse_number<int>(tokens[3], reader.line(), "region label");
        if (orient2d(nodes[static_cast<std::size_t>(elements[e][0])], nodes[static_cast<std::size_t>(elements[e][1])],
                     nodes[static_cast<std::size_t>(elements[e][2])]) <= 0.0)
            throw ParseError("element " + std::to_string(e) + " is not positively oriented", reader.line());
    }

    const std::size_t n_boundary = parse_section(reader, "boundary");
    std::vector<BoundaryEdge> boundary(n_boundary);
    for (auto& b : boundary) {
        reader.expect(tokens, "boundary edge");
        check_fields(tokens, 3, reader, "boundary");
        b.a = parse_node_index(tokens[0], n_nodes, reader.line());
        b.b = parse_node_index(tokens[1], n_nodes, reader.line());
        b.electrode = parse_number<int>(tokens[2], reader.line(), "electrode id");
        if (b.electrode < kNoElectrode) throw ParseError("electrode id must be -1 or non-negative", reader.line());
    }
    if (reader.next(tokens)) throw ParseError("trailing content after boundary section", reader.line());

    try {
        return Mesh(std::move(nodes), std::move(elements), std::move(regions), std::move(boundary));
    } catch (const InvalidArgument& err) {
        throw ParseError(err.what(), 0);
    }
}

void write_mesh(const std::filesystem::path& path, const Mesh& mesh) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write_mesh(out, mesh);
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Mesh read_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return read_mesh(in);
}

std::string mesh_fingerprint(const Mesh& mesh) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](std::uint64_t v) {
        for (int k = 0; k < 8; ++k) {
            h ^= (v >> (8 * k)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& p : mesh.nodes()) {
        mix(std::bit_cast<std::uint64_t>(p.x));
        mix(std::bit_cast<std::uint64_t>(p.y));
    }
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        for (int v : mesh.element(e)) mix(static_cast<std::uint64_t>(v));
        mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(mesh.region(e))));
    }
    for (const auto& b : mesh.boundary_edges()) {
        mix(static_cast<std::uint64_t>(b.a));
        mix(static_cast<std::uint64_t>(b.b));
        mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(b.electrode)));
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

}  // namespace qlert
