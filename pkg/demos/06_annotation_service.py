# The annotation service end to end, in process: two annotators label a
# stratified sample over the HTTP API, live agreement updates as they go,
# conflicts get a joint resolution, and the final dataset is exported.

from fastapi.testclient import TestClient

from forumstrata import (
    SampleSpec,
    SelectionRule,
    SynthConfig,
    distribution,
    generate,
    ingest,
    project,
    sample,
)
from forumstrata.annotation import (
    AnnotationStore,
    create_app,
    load_default_scheme,
    sample_bundle_from_population,
)
from forumstrata.centrality import post_degree
import tempfile

records, labels = generate(SynthConfig(n_members=200, n_threads=60, seed=31))
pop = project(ingest(records), SelectionRule())
dist = distribution(pop, post_degree(pop), 30)
drawn = sample(pop, dist, SampleSpec(strategy="proportional", size=8, seed=2))
bundle = sample_bundle_from_population("demo", pop, drawn)

scheme = load_default_scheme()
print("coding scheme:", [c.id for c in scheme.classes])

store_dir = tempfile.mkdtemp(prefix="annotation-demo-")
app = create_app({"demo": bundle}, scheme, AnnotationStore(store_dir))
client = TestClient(app)

# two annotators work through the queue independently; the second one
# disagrees on every third post
for who, disagree_every in (("alice", 0), ("bob", 3)):
    i = 0
    while True:
        nxt = client.get("/api/samples/demo/next", params={"annotator": who}).json()
        if nxt["done"]:
            break
        choice = "spam"
        if disagree_every and i % disagree_every == 0:
            choice = "not_criminal"
        client.post(
            "/api/samples/demo/labels",
            json={"annotator": who, "post_id": nxt["post"]["post_id"],
                  "class_id": choice},
        )
        i += 1

live = client.get("/api/samples/demo/agreement").json()
print(f"\nlive agreement: {live['kind']} kappa = {live['value']:.3f} "
      f"over {live['n_items']} co-labeled posts")
print("conflicted posts:", live["conflicts"])

# joint re-evaluation assigns one final label per conflicted post
for post_id in live["conflicts"]:
    client.post(
        "/api/samples/demo/resolutions",
        json={"post_id": post_id, "class_id": "spam"},
    )

export = client.get("/api/samples/demo/export.csv").text
print("\nexport (label rows + resolved final rows):")
print(export)
print("journal persisted under:", store_dir)
