#include "dsi/core/types.hpp"

#include <cmath>

#include "dsi/error.hpp"

namespace dsi {

std::string make_token_string(std::string_view dataset_slug, int class_id) {
    if (dataset_slug.empty()) fail(ErrorCode::InvalidArgument, "dataset slug is empty");
    for (char c : dataset_slug) {
        if (c == '<' || c == '>' || c == ' ' || c == '{' || c == '}') {
            fail(ErrorCode::InvalidArgument,
                 "dataset slug contains a reserved character: " + std::string(dataset_slug));
        }
    }
    return "<" + std::string(dataset_slug) + "-" + std::to_string(class_id) + ">";
}

bool is_token_string(std::string_view text) {
    if (text.size() < 4 || text.front() != '<' || text.back() != '>') return false;
    const auto inner = text.substr(1, text.size() - 2);
    return inner.find_first_of("<> ") == std::string_view::npos && inner.find('-') != std::string_view::npos;
}

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
    std::size_t count = 0;
    for (auto pos = text.find(needle); pos != std::string_view::npos;
         pos = text.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

}  // namespace

void validate(const ShiftSpec& spec) {
    if (spec.name.empty()) fail(ErrorCode::InvalidArgument, "shift name is empty");
    const auto n = count_occurrences(spec.prompt_template, kTokenPlaceholder);
    if (n == 0) {
        fail(ErrorCode::PlaceholderMissing, "template of shift '" + spec.name + "' has no {token}");
    }
    if (n > 1) {
        fail(ErrorCode::PlaceholderDuplicated,
             "template of shift '" + spec.name + "' has more than one {token}");
    }
    if (spec.shift_threshold) {
        const double t = *spec.shift_threshold;
        if (!std::isfinite(t) || t < -1.0 || t > 1.0) {
            fail(ErrorCode::InvalidArgument, "threshold of shift '" + spec.name + "' outside [-1, 1]");
        }
    }
}

}  // namespace dsi
