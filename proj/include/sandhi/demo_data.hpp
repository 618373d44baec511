#pragma once

#include <vector>

#include "sandhi/corpus.hpp"

namespace sandhi {

// A small built-in lexicon and sandhi table for synthesizing corpora. The
// vocabulary is Sanskrit-flavoured but the point is structural: several
// inflection paradigms (including stems whose tail changes, so non-trivial
// stem rules arise), indeclinables that stem to themselves, and fusion rules
// covering vowel merges, glides and plain concatenation.

inline std::vector<SandhiFusion> demo_sandhi_table() {
    return {
        {U'a', U'a', U"ā"},          // a + a -> ā
        {U'a', U'i', U"e"},               // a + i -> e
        {U'a', U'u', U"o"},               // a + u -> o
        {U'i', U'a', U"ya"},              // i + a -> ya
        {U'u', U'a', U"va"},              // u + a -> va
        {U'ā', U'a', U"ā"},     // ā + a -> ā
        {U'm', U'a', U"ma"},              // written together, no sound change
        {U'n', U's', U"ns"},              // written together, no sound change
    };
}

inline std::vector<LexEntry> demo_lexicon() {
    // ā = ā, ī = ī, ū = ū, ḥ = ḥ, ś = ś
    const std::vector<Inflection> masc_a = {
        {0, U"ḥ", "nom. sg. m."},
        {0, U"m", "acc. sg. m."},
        {1, U"ena", "i. sg. m."},
        {1, U"āya", "dat. sg. m."},
        {1, U"asya", "g. sg. m."},
        {1, U"e", "loc. sg. m."},
        {1, U"āḥ", "nom. pl. m."},
        {1, U"ān", "acc. pl. m."},
    };
    const std::vector<Inflection> fem_long_a = {
        {0, U"", "nom. sg. f."},
        {0, U"m", "acc. sg. f."},
        {1, U"ayā", "i. sg. f."},
        {0, U"yāḥ", "g. sg. f."},
        {0, U"yām", "loc. sg. f."},
    };
    const std::vector<Inflection> verb_u_grade = {
        {1, U"avati", "pr. [1] ac. sg. 3"},
        {1, U"avasi", "pr. [1] ac. sg. 2"},
        {1, U"avāmi", "pr. [1] ac. sg. 1"},
        {1, U"avanti", "pr. [1] ac. pl. 3"},
    };
    const std::vector<Inflection> verb_thematic = {
        {0, U"ati", "pr. [1] ac. sg. 3"},
        {0, U"asi", "pr. [1] ac. sg. 2"},
        {0, U"āmi", "pr. [1] ac. sg. 1"},
        {0, U"anti", "pr. [1] ac. pl. 3"},
    };

    std::vector<LexEntry> lex;
    auto noun = [&](std::u32string stem) { lex.push_back({std::move(stem), masc_a}); };
    auto fem = [&](std::u32string stem) { lex.push_back({std::move(stem), fem_long_a}); };
    auto uverb = [&](std::u32string stem) { lex.push_back({std::move(stem), verb_u_grade}); };
    auto verb = [&](std::u32string stem) { lex.push_back({std::move(stem), verb_thematic}); };
    auto indecl = [&](std::u32string word, const char* tag) {
        lex.push_back({std::move(word), {{0, U"", tag}}});
    };

    noun(U"deva");
    noun(U"putra");
    noun(U"gaja");
    noun(U"vīra");
    noun(U"rāma");
    noun(U"aśva");
    noun(U"nara");
    noun(U"mitra");
    noun(U"sūrya");
    noun(U"grāma");

    fem(U"mālā");
    fem(U"senā");
    fem(U"kanyā");
    fem(U"latā");
    fem(U"vidyā");
    fem(U"prajā");
    fem(U"kathā");
    fem(U"bhāṣā");  // ṣ = ṣ

    uverb(U"bhū");
    uverb(U"sū");
    uverb(U"dhū");

    verb(U"vad");
    verb(U"pat");
    verb(U"car");
    verb(U"vas");
    verb(U"has");
    verb(U"likh");
    verb(U"khād");
    verb(U"budh");

    indecl(U"ca", "conj.");
    indecl(U"na", "part.");
    indecl(U"atra", "adv.");
    indecl(U"iti", "part.");
    indecl(U"eva", "part.");
    indecl(U"api", "part.");
    indecl(U"iha", "adv.");
    indecl(U"saha", "prep.");
    indecl(U"uta", "part.");
    indecl(U"adya", "adv.");
    indecl(U"sādhu", "adv.");
    indecl(U"kintu", "conj.");

    return lex;
}

}  // namespace sandhi
