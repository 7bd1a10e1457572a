#include <windlog/lang.hpp>
#include <windlog/rewrite.hpp>

#include <stdexcept>

namespace windlog::rewrite {

std::string to_string(AuxSignature const &sig) {
    std::string out = sig.source.to_string();
    switch (sig.modality) {
        case Modality::AtLeast: out += " at least " + std::to_string(*sig.count); break;
        case Modality::AtMost: out += " at most " + std::to_string(*sig.count); break;
        case Modality::Always: out += " always"; break;
        case Modality::Count: out += sig.count ? " count " + std::to_string(*sig.count) : " count VAR"; break;
    }
    out += " in {";
    for (std::size_t i = 0; i < sig.offsets.size(); ++i) {
        if (i > 0) { out += ','; }
        out += std::to_string(sig.offsets[i]);
    }
    return out + "}";
}

std::optional<std::size_t> TauMapping::find(AuxSignature const &sig) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].signature == sig) { return i; }
    }
    return std::nullopt;
}

std::optional<std::size_t> TauMapping::find(PredicateKey const &aux) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].key() == aux) { return i; }
    }
    return std::nullopt;
}

bool is_aux(Symbol predicate) { return predicate.str().starts_with(lang::reserved_prefix); }

FlattenResult flatten(Program const &program) {
    FlattenResult result;
    result.flat = program;
    auto &tau = result.tau;
    for (auto &rule : result.flat.rules) {
        for (auto &lit : rule.body) {
            auto *s = std::get_if<StreamingLiteral>(&lit);
            if (s == nullptr || s->degenerate()) { continue; }
            AuxSignature sig;
            sig.source = s->atom.key();
            sig.modality = s->modality;
            if (s->modality != Modality::Always && s->count.is_constant()) { sig.count = s->count.value().as_integer(); }
            sig.offsets = s->window.offsets;
            auto index = tau.find(sig);
            if (!index) {
                AuxPredicate aux;
                aux.signature = sig;
                aux.arity = sig.source.arity + (sig.variable_count() ? 1 : 0);
                aux.name = Symbol::intern(std::string(lang::reserved_prefix) + std::to_string(tau.entries.size() + 1) +
                                          "__" + std::string(sig.source.name.str()));
                tau.entries.push_back(aux);
                index = tau.entries.size() - 1;
            }
            StreamingLiteral flat;
            flat.negative = s->negative;
            flat.atom.predicate = tau.entries[*index].name;
            flat.atom.terms = s->atom.terms;
            flat.atom.loc = s->atom.loc;
            if (sig.variable_count()) { flat.atom.terms.push_back(s->count); }
            *s = std::move(flat);
        }
    }
    return result;
}

std::vector<GroundAtom> materialize_aux(TauMapping const &tau, std::size_t index, std::vector<Tuple> const &holding) {
    auto const &aux = tau.entries.at(index);
    std::vector<GroundAtom> out;
    out.reserve(holding.size());
    for (auto const &t : holding) {
        if (t.size() != aux.arity) { throw std::logic_error("aux tuple arity mismatch for " + to_string(aux.signature)); }
        out.emplace_back(aux.name, t);
    }
    return out;
}

} // namespace windlog::rewrite
