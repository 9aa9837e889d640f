#pragma once

#include <vector>

#include "dancer/corrector.hpp"

namespace dancer {

// Phonetic-only corrector: same detector, phonetic retrieval and n-best
// rejection as the full pipeline, without any semantic re-ranking. The most
// phonetically similar entity (lower id on ties) is proposed directly.
UtteranceCorrection ped_nec_correct(const Utterance& utt, const EntityCatalog& catalog, const Detector& detector,
                                    const CorrectorConfig& cfg);

std::vector<UtteranceCorrection> ped_nec_correct_corpus(const std::vector<Utterance>& corpus,
                                                        const EntityCatalog& catalog, const Detector& detector,
                                                        const CorrectorConfig& cfg);

}  // namespace dancer
