#pragma once

#include <map>
#include <string>

#include "flame/util.hpp"

namespace flame {

inline constexpr int kPromptTemplateVersion = 1;

// Marker appended to a line to flag it as faulty; the explanation follows it.
inline constexpr const char* kMarkerToken = "// @@";

// Built-in v1 templates. Placeholders: {statement}, {failing_test},
// {reference}, {program}, {format_instruction}. A template directory can
// override any of them by file name (e.g. annotate_user.txt).
struct PromptTemplates {
    std::string annotate_system =
        "You are an expert programming instructor reviewing a student's submission to a "
        "programming assignment. Your task is to locate the faulty lines in the program.";

    std::string annotate_user =
        "{statement}"
        "{failing_test}"
        "{reference}"
        "{program}"
        "{format_instruction}";

    std::string repair_system =
        "You are an expert programming instructor. Repair the student's faulty program so "
        "that it satisfies the assignment.";

    std::string repair_user =
        "{statement}"
        "{failing_test}"
        "{localization}"
        "{program}"
        "{format_instruction}";

    static PromptTemplates load(const fs::path& dir) {
        PromptTemplates t;
        auto maybe = [&](const char* name, std::string& slot) {
            fs::path p = dir / name;
            if (fs::is_regular_file(p)) slot = read_file(p);
        };
        maybe("annotate_system.txt", t.annotate_system);
        maybe("annotate_user.txt", t.annotate_user);
        maybe("repair_system.txt", t.repair_system);
        maybe("repair_user.txt", t.repair_user);
        return t;
    }
};

inline std::string fill_template(std::string text,
                                 const std::map<std::string, std::string>& values) {
    for (const auto& [key, value] : values) {
        std::string placeholder = "{" + key + "}";
        std::size_t pos = 0;
        while ((pos = text.find(placeholder, pos)) != std::string::npos) {
            text.replace(pos, placeholder.size(), value);
            pos += value.size();
        }
    }
    return text;
}

} // namespace flame
