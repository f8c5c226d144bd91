#include <algorithm>
#include <cmath>

#include "layout/layout_internal.hpp"

namespace sysarch {

namespace {

bool is_continuation(unsigned char c)
{
    return (c & 0xC0) == 0x80;
}

// Splits into code points so wrapping never cuts a multi-byte sequence.
std::vector<std::string> code_points(std::string_view text)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < text.size();) {
        std::size_t j = i + 1;
        while (j < text.size() && is_continuation(static_cast<unsigned char>(text[j]))) {
            ++j;
        }
        out.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string> hard_wrap(const std::vector<std::string>& cps, std::size_t cpl)
{
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < cps.size(); i += cpl) {
        std::string line;
        for (std::size_t k = i; k < std::min(cps.size(), i + cpl); ++k) {
            line += cps[k];
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

}  // namespace

std::size_t text_length(std::string_view text)
{
    std::size_t n = 0;
    for (unsigned char c : text) {
        if (!is_continuation(c)) {
            ++n;
        }
    }
    return n;
}

std::vector<std::string> wrap_text(std::string_view text, std::size_t chars_per_line)
{
    const std::size_t cpl = std::max<std::size_t>(1, chars_per_line);
    auto cps = code_points(text);
    for (auto& cp : cps) {
        if (cp == "\n" || cp == "\r" || cp == "\t") {
            cp = " ";
        }
    }
    if (cps.empty()) {
        return {};
    }
    const std::size_t bound = (cps.size() + cpl - 1) / cpl;

    std::vector<std::string> lines;
    std::string line;
    std::size_t line_len = 0;
    std::size_t i = 0;
    while (i < cps.size()) {
        if (cps[i] == " ") {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < cps.size() && cps[j] != " ") {
            ++j;
        }
        const std::size_t word_len = j - i;
        std::string word;
        for (std::size_t k = i; k < j; ++k) {
            word += cps[k];
        }
        if (word_len > cpl) {
            // Long word: fill the current line, then continue on fresh lines.
            std::size_t k = i;
            while (k < j) {
                const std::size_t room = line_len == 0 ? cpl : (cpl > line_len + 1 ? cpl - line_len - 1 : 0);
                if (room == 0) {
                    lines.push_back(std::move(line));
                    line.clear();
                    line_len = 0;
                    continue;
                }
                if (line_len > 0) {
                    line += ' ';
                    ++line_len;
                }
                const std::size_t take = std::min(room, j - k);
                for (std::size_t t = k; t < k + take; ++t) {
                    line += cps[t];
                }
                line_len += take;
                k += take;
                if (k < j) {
                    lines.push_back(std::move(line));
                    line.clear();
                    line_len = 0;
                }
            }
        } else if (line_len == 0) {
            line = word;
            line_len = word_len;
        } else if (line_len + 1 + word_len <= cpl) {
            line += ' ';
            line += word;
            line_len += 1 + word_len;
        } else {
            lines.push_back(std::move(line));
            line = word;
            line_len = word_len;
        }
        i = j;
    }
    if (line_len > 0) {
        lines.push_back(std::move(line));
    }
    if (lines.size() > bound) {
        return hard_wrap(cps, cpl);
    }
    return lines;
}

std::string display_text(const HierNode& node)
{
    if (node.kind == NodeKind::ComponentText && node.has_payload() && !node.payload().empty()) {
        return node.payload();
    }
    return node.name;
}

Size leaf_size(std::string_view text, bool with_icon, const LayoutStyle& style)
{
    const std::size_t len = text_length(text);
    const std::size_t cpl = std::max<std::size_t>(1, style.chars_per_line);
    const std::size_t lines = (len + cpl - 1) / cpl;
    const std::size_t widest = std::min(len, cpl);
    double w = static_cast<double>(widest) * style.char_width + 2 * style.text_padding;
    double h = static_cast<double>(lines) * style.line_height + 2 * style.text_padding;
    if (with_icon) {
        w += style.icon_size + style.text_padding;
        h = std::max(h, style.icon_size + 2 * style.text_padding);
    }
    return {std::max(w, style.min_box_w), std::max(h, style.min_box_h)};
}

namespace detail {

std::size_t chars_for_width(double w, const LayoutStyle& style)
{
    const double inner = w - 2 * style.text_padding;
    return static_cast<std::size_t>(std::max(1.0, std::floor(inner / style.char_width + 1e-9)));
}

}  // namespace detail

std::map<std::string, Size> size_weights(const HierGraph& g, const LayoutStyle& style)
{
    std::map<std::string, detail::PackedNode> packed;
    detail::pack_subtree(g.root, style, packed);
    std::map<std::string, Size> out;
    for (const auto& [id, p] : packed) {
        out[id] = p.size;
    }
    return out;
}

}  // namespace sysarch
