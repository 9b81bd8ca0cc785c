#include "tabsem/common.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

namespace tabsem {

namespace detail {
std::string format_v(const char* fmt, va_list ap) {
    va_list ap2;
    va_copy(ap2, ap);
    int n = std::vsnprintf(nullptr, 0, fmt, ap2);
    va_end(ap2);
    if (n < 0) return fmt;
    std::string out(static_cast<size_t>(n), '\0');
    std::vsnprintf(out.data(), out.size() + 1, fmt, ap);
    return out;
}
}  // namespace detail

std::string format(const char* fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    std::string s = detail::format_v(fmt, ap);
    va_end(ap);
    return s;
}

void fail(const char* fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    std::string s = detail::format_v(fmt, ap);
    va_end(ap);
    throw Error(s);
}

void fail_parse(const char* fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    std::string s = detail::format_v(fmt, ap);
    va_end(ap);
    throw ParseError(s);
}

static std::atomic<bool> g_quiet{false};

void set_quiet(bool q) { g_quiet.store(q); }
bool quiet() { return g_quiet.load(); }

void log_info(const char* fmt, ...) {
    if (quiet()) return;
    va_list ap;
    va_start(ap, fmt);
    std::string s = detail::format_v(fmt, ap);
    va_end(ap);
    std::fprintf(stderr, "[info] %s\n", s.c_str());
}

void log_warn(const char* fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    std::string s = detail::format_v(fmt, ap);
    va_end(ap);
    std::fprintf(stderr, "[warn] %s\n", s.c_str());
}

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        char x = a[i], y = b[i];
        if (x >= 'A' && x <= 'Z') x = static_cast<char>(x - 'A' + 'a');
        if (y >= 'A' && y <= 'Z') y = static_cast<char>(y - 'A' + 'a');
        if (x != y) return false;
    }
    return true;
}

std::string format_number(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
        long long i = static_cast<long long>(v);
        return std::to_string(i);
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

bool parse_number(std::string_view s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_parse("cannot open file: %s", path.c_str());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot open file for writing: %s", path.c_str());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail("write failed: %s", path.c_str());
}

}  // namespace tabsem
