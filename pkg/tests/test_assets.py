import base64
import hashlib
import json

import httpx
import pytest

from cineforge.assets import AssetCache, Providers, build_providers, execute_jobs, make_job, plan_jobs
from cineforge.assets.jobs import JobGraph, entity_jobs, retexture_job, texture_job, window_job
from cineforge.descriptors import Feature
from cineforge.assets.placeholders import glb_extras, placeholder_png
from cineforge.errors import ProviderError
from cineforge.planner import ClipInfo, build_plan
from cineforge.room import load_detailed_scan
from cineforge.transport import post_with_retry

from conftest import DETAILED_SCAN, make_doc

CLIP = ClipInfo("c0ffee", 60.0, "Test Movie")
FEATHER = {"description": "black feather", "position": "in_the_air", "quantity": "many", "size": 0.05,
           "motion_details": {"pattern": "falling"}}
ZOMBIE = {"description": "Shambling zombie", "motion": "moving", "quantity": "several", "size": 1.0}


@pytest.fixture
def plan(simple_room):
    docs = [
        make_doc("objects", [(0, 10, FEATHER), (10, 20, {**FEATHER, "quantity": "a_few"})]),
        make_doc("characters", [(0, 20, ZOMBIE)]),
        make_doc("body", [(0, 30, "black, armored tactical glove")]),
        make_doc("textures", [(0, 30, {"overall_scene_context": "attic", "outside_view_context": None,
                                       "floor_texture_keywords": ["dusty plank"], "wall_texture_keywords": [],
                                       "ceiling_texture_keywords": []})]),
    ]
    return build_plan(docs, simple_room, CLIP, seed=1)


def test_job_id_is_content_hash():
    a = make_job("surface_texture", "p", {"size": "1024x1024"})
    assert a.job_id == make_job("surface_texture", "p", {"size": "1024x1024"}).job_id
    assert a.job_id != make_job("surface_texture", "p", {"size": "512x512"}).job_id
    assert len(a.job_id) == 64


def test_shared_descriptions_share_jobs(plan):
    graph = plan_jobs(plan)
    kinds = sorted(j.kind for j in graph)
    assert kinds == ["entity_image", "entity_image", "entity_mesh", "entity_mesh", "hand_texture", "surface_texture"]
    refs = [j for f in Feature for d in plan.directives(f) for j in getattr(d, "assets", ())]
    assert len(graph) <= len(refs) and set(refs) == {j.job_id for j in graph}
    first, second = plan.objects
    assert first.asset == second.asset and first.segment_index != second.segment_index


def test_entity_resolutions_and_dependency():
    char_img, char_mesh = entity_jobs("character", "Shambling zombie", "Night")
    obj_img, _ = entity_jobs("object", "black feather", "Night")
    assert char_img.params["resolution"] == "1024x1536"
    assert obj_img.params["resolution"] == "1024x1024"
    assert char_mesh.depends_on == char_img.job_id


def test_exterior_and_retexture_jobs():
    assert window_job("desert dunes").params["size"] == "1536x1024"
    a = retexture_job("attic", "ab" * 32, "/one/place/room.obj")
    b = retexture_job("attic", "ab" * 32, "/another/room.obj")
    assert a.job_id == b.job_id and a.kind == "mesh_retexture"


def test_detailed_room_gets_retexture_job():
    room = load_detailed_scan(DETAILED_SCAN)
    ctx = {"overall_scene_context": "attic", "outside_view_context": None, "floor_texture_keywords": [],
           "wall_texture_keywords": [], "ceiling_texture_keywords": []}
    plan = build_plan([make_doc("textures", [(0, 10, ctx), (10, 20, ctx)])], room, CLIP)
    graph = plan_jobs(plan)
    assert [j.kind for j in graph] == ["mesh_retexture"]


def test_graph_order_is_topological(plan):
    graph = plan_jobs(plan)
    order = graph.order()
    for job in graph:
        if job.depends_on:
            assert order.index(job.depends_on) < order.index(job.job_id)


def test_execute_and_warm_cache(plan, tmp_path):
    graph = plan_jobs(plan)
    providers = Providers.mock()
    cache = AssetCache(tmp_path / "cache")
    first = execute_jobs(graph, providers, cache, parallelism=4)
    assert all(r.ok for r in first) and [r.job_id for r in first] == sorted(r.job_id for r in first)
    calls = providers.total_calls()
    assert calls > 0
    for r in first:
        data = open(r.artifact, "rb").read()
        assert hashlib.sha256(data).hexdigest() == r.sha256
        assert (tmp_path / "cache" / r.job_id / "record.json").is_file()
    snapshot = {p: p.read_bytes() for p in (tmp_path / "cache").rglob("*") if p.is_file()}
    second = execute_jobs(graph, providers, cache, parallelism=4)
    assert providers.total_calls() == calls
    assert second == first
    assert {p: p.read_bytes() for p in (tmp_path / "cache").rglob("*") if p.is_file()} == snapshot


def test_parallelism_does_not_change_records(plan, tmp_path):
    graph = plan_jobs(plan)
    one = execute_jobs(graph, Providers.mock(), AssetCache(tmp_path / "a"), parallelism=1)
    many = execute_jobs(graph, Providers.mock(), AssetCache(tmp_path / "b"), parallelism=8)
    assert [(r.job_id, r.status, r.sha256, r.description) for r in one] == [
        (r.job_id, r.status, r.sha256, r.description) for r in many
    ]


def test_mock_artifacts():
    png = placeholder_png("abc")
    assert png.startswith(b"\x89PNG") and png == placeholder_png("abc") and png != placeholder_png("abd")


def test_mesh_embeds_job_id(plan, tmp_path):
    records = execute_jobs(plan_jobs(plan), Providers.mock(), AssetCache(tmp_path))
    mesh = next(r for r in records if r.kind == "entity_mesh")
    assert glb_extras(open(mesh.artifact, "rb").read())["job_id"] == mesh.job_id


def test_descriptions_are_limited(plan, tmp_path):
    class Verbose:
        name = "verbose"
        calls = 0

        def describe(self, prompt, params, *, job_id):
            return "A full-body, photorealistic, highly detailed depiction of a thing. " * 30

    records = execute_jobs(plan_jobs(plan), Providers(describer=Verbose()), AssetCache(tmp_path))
    described = [r.description for r in records if r.kind == "entity_image"]
    assert described and all(len(d) < 900 for d in described)


class FailingImages:
    name = "broken"
    calls = 0

    def generate_image(self, prompt, params, *, job_id):
        if params.get("entity_kind") == "character":
            raise ProviderError("boom")
        return placeholder_png(job_id)


def test_failure_skips_dependents_only(plan, tmp_path):
    records = execute_jobs(plan_jobs(plan), Providers(image=FailingImages()), AssetCache(tmp_path), parallelism=3)
    by_kind = {}
    for r in records:
        by_kind.setdefault((r.kind, r.status), 0)
        by_kind[(r.kind, r.status)] += 1
    assert by_kind[("entity_image", "failed")] == 1
    assert by_kind[("entity_mesh", "skipped")] == 1
    assert by_kind[("entity_mesh", "ok")] == 1
    assert by_kind[("hand_texture", "ok")] == 1


def test_dangling_dependency_rejected():
    graph = JobGraph()
    graph.add(make_job("entity_mesh", "x", {}, depends_on="0" * 64))
    with pytest.raises(KeyError):
        graph.order()


# --------------------------------------------------------------------------
# HTTP providers


def test_retry_on_5xx_then_success():
    statuses = iter([503, 429, 200])
    sleeps = []
    client = httpx.Client(transport=httpx.MockTransport(lambda req: httpx.Response(next(statuses), content=b"ok")))
    resp = post_with_retry(client, "https://gen.example/api", sleep=sleeps.append)
    assert resp.content == b"ok" and sleeps == [1.0, 2.0]


def test_retries_exhausted():
    sleeps = []
    client = httpx.Client(transport=httpx.MockTransport(lambda req: httpx.Response(500)))
    with pytest.raises(ProviderError) as info:
        post_with_retry(client, "https://gen.example/api", sleep=sleeps.append)
    assert info.value.attempts == 4 and sleeps == [1.0, 2.0, 4.0]


def test_transport_errors_retry_and_4xx_does_not():
    def boom(req):
        raise httpx.ConnectError("refused")

    client = httpx.Client(transport=httpx.MockTransport(boom))
    with pytest.raises(ProviderError) as info:
        post_with_retry(client, "https://gen.example/api", sleep=lambda s: None)
    assert info.value.kind == "transport"
    client = httpx.Client(transport=httpx.MockTransport(lambda req: httpx.Response(400)))
    with pytest.raises(ProviderError) as info:
        post_with_retry(client, "https://gen.example/api", sleep=lambda s: None)
    assert info.value.attempts == 1 and info.value.kind == "http"


def test_http_image_provider_sends_key_and_decodes(monkeypatch, tmp_path):
    monkeypatch.setenv("CINEFORGE_IMAGE_KEY", "secret")
    png = placeholder_png("remote")
    seen = []

    def handler(req):
        seen.append((req.headers.get("authorization"), json.loads(req.content)))
        return httpx.Response(200, json={"data": [{"b64_json": base64.b64encode(png).decode()}]})

    client = httpx.Client(transport=httpx.MockTransport(handler))
    providers = build_providers({"image": {"kind": "http", "endpoint": "https://img.example/v1", "model": "m"}}, client)
    job = texture_job("floor", ["rotting plank"])
    graph = JobGraph()
    graph.add(job)
    (record,) = execute_jobs(graph, providers, AssetCache(tmp_path))
    assert record.ok and record.sha256 == hashlib.sha256(png).hexdigest() and record.provider == "http:m"
    auth, body = seen[0]
    assert auth == "Bearer secret" and body["prompt"] == job.prompt and body["size"] == "1024x1024"


def test_missing_api_key_fails_the_job(monkeypatch, tmp_path):
    monkeypatch.delenv("CINEFORGE_MESH_KEY", raising=False)
    client = httpx.Client(transport=httpx.MockTransport(lambda req: httpx.Response(200)))
    providers = build_providers({"mesh": {"kind": "http", "endpoint": "https://mesh.example"}}, client)
    image, mesh = entity_jobs("object", "black feather", "Night")
    graph = JobGraph()
    graph.add(image)
    graph.add(mesh)
    records = {r.kind: r for r in execute_jobs(graph, providers, AssetCache(tmp_path))}
    assert records["entity_image"].ok
    assert records["entity_mesh"].status == "failed" and "CINEFORGE_MESH_KEY" in records["entity_mesh"].error


def test_bad_provider_config():
    with pytest.raises(ProviderError):
        build_providers({"image": {"kind": "ftp"}})
