#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ragforge/errors.hpp"
#include "ragforge/providers.hpp"

namespace ragforge {

// Prompt assets live as plain text files, one per LLM-backed stage method.
// Line 1 is the system message (its first token is the dispatch tag the mock
// chat model keys on); the rest is the user template with {placeholder}
// fields such as {query}, {evidence}, {answer}, {reference}, {missing}.
struct PromptTemplate {
    std::string system;
    std::string user;

    ChatRequest render(const std::map<std::string, std::string>& vars) const {
        return ChatRequest::make(system, substitute(user, vars));
    }

    static std::string substitute(std::string_view tmpl,
                                  const std::map<std::string, std::string>& vars) {
        std::string out;
        out.reserve(tmpl.size());
        std::size_t i = 0;
        while (i < tmpl.size()) {
            if (tmpl[i] == '{') {
                auto close = tmpl.find('}', i);
                if (close != std::string_view::npos) {
                    auto key = std::string(tmpl.substr(i + 1, close - i - 1));
                    auto it = vars.find(key);
                    if (it != vars.end()) {
                        out += it->second;
                        i = close + 1;
                        continue;
                    }
                }
            }
            out += tmpl[i++];
        }
        return out;
    }
};

class PromptLibrary {
  public:
    static const std::vector<std::string>& asset_names() {
        static const std::vector<std::string> names = {
            "hyde",          "multi_query", "decomposition", "step_back",
            "clarification", "llm_rerank",  "llm_summarize", "tree_summarize",
            "answer",        "critique",    "revise",        "judge"};
        return names;
    }

    static PromptLibrary from_dir(const std::filesystem::path& dir) {
        PromptLibrary lib;
        for (const auto& name : asset_names()) {
            auto path = dir / (name + ".txt");
            std::ifstream in(path);
            if (!in)
                throw ParseError("missing prompt asset " + path.string());
            std::stringstream buf;
            buf << in.rdbuf();
            std::string content = buf.str();
            auto nl = content.find('\n');
            if (nl == std::string::npos || trim(content.substr(0, nl)).empty())
                throw ParseError("prompt asset " + path.string() +
                                 " needs a system line followed by a user template");
            PromptTemplate t;
            t.system = std::string(trim(content.substr(0, nl)));
            t.user = content.substr(nl + 1);
            while (!t.user.empty() && (t.user.back() == '\n' || t.user.back() == '\r'))
                t.user.pop_back();
            lib.templates_[name] = std::move(t);
        }
        return lib;
    }

    const PromptTemplate& get(std::string_view name) const {
        auto it = templates_.find(std::string(name));
        if (it == templates_.end())
            throw InvalidParam("unknown prompt asset '" + std::string(name) + "'");
        return it->second;
    }

  private:
    std::map<std::string, PromptTemplate> templates_;
};

} // namespace ragforge
