"""Build, save, and query an embedding store.

The store is the only feature source in the engine: views, phrases, and
instructions are all precomputed vectors behind string keys.
"""
import tempfile

import numpy as np

from consolenav.store import (
    EmbeddingStore, TextQuery, dot, load_store, mean_pool, save_store,
    text_feature,
)

rng = np.random.default_rng(0)
entries = {
    "sofa": rng.normal(size=8),
    "a photo of a sofa": rng.normal(size=8),
    "rug": rng.normal(size=8),
}
store = EmbeddingStore(8, entries)
print(f"in-memory store: {len(store)} entries, dimension {store.dimension}")

with tempfile.NamedTemporaryFile(suffix=".bin") as tmp:
    save_store(store, tmp.name)
    loaded = load_store(tmp.name)
    print(f"round-tripped through {tmp.name}: {len(loaded)} entries")

plain = text_feature(loaded, TextQuery("sofa"))
prompted = text_feature(loaded, TextQuery("sofa", use_photo_prompt=True))
print("lookup 'sofa' and 'a photo of a sofa' give different vectors:",
      not np.array_equal(plain, prompted))

pooled = mean_pool([plain, loaded.get("rug")])
print(f"pooled observation feature, first 3 components: {pooled[:3].round(3)}")
print(f"dot(sofa, rug) = {dot(plain, loaded.get('rug')):.4f}")
