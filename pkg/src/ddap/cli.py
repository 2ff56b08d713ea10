"""Terminal entry point: session management, interactive chat, headless
runs, the HTTP service, metric evaluation, and sandboxed execution.

Exit codes: 0 on success, 2 on usage errors, 1 on any run failure (printed
as a one-line diagnostic on stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agents.backends import ScriptedBackend, backend_from_env, load_transcript
from .errors import DdapError
from .metrics import (
    evaluate_classification,
    mae,
    read_clustering_csv,
    read_prediction_csv,
    silhouette,
)
from .orchestrator import (
    STAGE_DONE,
    DIALOGUE_STAGES,
    Orchestrator,
    run_headless,
)
from .sandbox import SandboxLimits, execute_code
from .store import ArtifactStore

CHAT_HELP = """commands:
  /plan           generate the preprocessing plan
  /pipelines      generate the five pipeline candidates
  /select <n>     choose candidate n (1-5)
  /code [n]       generate code for candidate n (default: selected)
  /run [ref]      execute a code artifact (default: newest)
  /repair [ref]   repair the last failing execution (default: newest)
  /finalize       mark the session done
  /artifacts      list persisted artifact refs
  /quit           leave the chat
anything else is sent to the agent as a message"""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddap",
                                     description="staged pipeline-synthesis engine")
    parser.add_argument("--data-dir", help="session store root (default: DDAP_DATA_DIR)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_new = sub.add_parser("new", help="create a session")
    p_new.add_argument("--domain", help="researcher domain for the profile")
    p_new.add_argument("--expertise", help="researcher expertise level for the profile")

    p_chat = sub.add_parser("chat", help="interactive session loop")
    p_chat.add_argument("--session", required=True, help="session id")

    p_headless = sub.add_parser("headless", help="run all stages from files")
    p_headless.add_argument("--intent", required=True, help="file with the initial intent")
    p_headless.add_argument("--answers", required=True,
                            help="file with the user answers, one per line or a JSON array")
    p_headless.add_argument("--script", help="scripted transcript path (overrides env)")
    p_headless.add_argument("--select", type=int, default=1,
                            help="candidate to generate code for (default 1)")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--port", type=int, help="port (default: DDAP_PORT)")
    p_serve.add_argument("--host", default="127.0.0.1")

    p_eval = sub.add_parser("eval", help="score predictions from a CSV")
    p_eval.add_argument("--pred", required=True, help="prediction CSV path")
    p_eval.add_argument("--task", required=True,
                        choices=["classification", "regression", "clustering"])
    p_eval.add_argument("--distance", default="euclidean",
                        choices=["euclidean", "manhattan"],
                        help="distance for clustering silhouette")
    p_eval.add_argument("--label-column", default="label",
                        help="label column for clustering CSVs")

    p_exec = sub.add_parser("exec", help="execute a stored code artifact")
    p_exec.add_argument("--code", required=True, help="store-relative artifact ref")

    return parser


def _store(args) -> ArtifactStore:
    return ArtifactStore(args.data_dir) if args.data_dir else ArtifactStore()


def _read_answers(path: str) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except ValueError:
        data = None
    if isinstance(data, list) and all(isinstance(item, str) for item in data):
        return data
    return [line for line in text.splitlines() if line.strip()]


def _cmd_new(args) -> int:
    store = _store(args)
    orch = Orchestrator(store=store, backend=None)
    profile = {}
    if args.domain:
        profile["domain"] = args.domain
    if args.expertise:
        profile["expertise"] = args.expertise
    state = orch.create_session(profile or None)
    print(f"session {state.session_id} created at stage {state.stage}")
    return 0


def _print_result(result: dict) -> None:
    print(json.dumps(result, sort_keys=True, indent=2))


def _cmd_chat(args) -> int:
    store = _store(args)
    orch = Orchestrator(store=store, backend=backend_from_env())
    state = orch.load_session(args.session)
    limits = SandboxLimits.from_env()
    print(f"session {state.session_id} at stage {state.stage}; /help for commands")
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            if line == "/quit":
                break
            elif line == "/help":
                print(CHAT_HELP)
            elif line == "/plan":
                orch.generate_preprocessing(state)
                print(f"preprocessing plan persisted; stage {state.stage}")
            elif line == "/pipelines":
                document = orch.generate_pipelines(state)
                for cand in document["candidates"]:
                    print(f"  {cand['index']}. {cand['name']}: {cand['description']}")
                print(f"stage {state.stage}")
            elif line.startswith("/select"):
                index = int(line.split()[1])
                orch.select_pipeline(state, index)
                print(f"selected candidate {index}")
            elif line.startswith("/code"):
                parts = line.split()
                index = int(parts[1]) if len(parts) > 1 else None
                orch.generate_code(state, index)
                print(f"code persisted at {state.code_refs[-1].path}")
            elif line.startswith("/run"):
                parts = line.split()
                ref = (store.find_ref(parts[1]) if len(parts) > 1
                       else state.code_refs[-1])
                document = store.load_code_artifact(ref)
                result = execute_code(document, limits)
                orch.record_execution(state, ref, result)
                print(f"exit {result.exit_status} in {result.duration_ms} ms"
                      + (" (timed out)" if result.timed_out else ""))
                if result.stdout_excerpt:
                    print(result.stdout_excerpt, end="")
                if result.stderr_excerpt:
                    print(result.stderr_excerpt, end="", file=sys.stderr)
                print(f"stage {state.stage}")
            elif line.startswith("/repair"):
                parts = line.split()
                ref = (store.find_ref(parts[1]) if len(parts) > 1
                       else state.code_refs[-1])
                _, new_ref = orch.repair_recorded(state, ref)
                print(f"repaired artifact at {new_ref.path}")
            elif line == "/finalize":
                orch.finalize(state)
                print("session done")
            elif line == "/artifacts":
                for kind, ref in sorted(state.artifact_refs.items()):
                    print(f"  {kind}: {ref.path}")
                for ref in state.code_refs:
                    print(f"  code: {ref.path}")
            elif line.startswith("/"):
                print(f"unknown command {line.split()[0]}; /help for commands")
            else:
                if state.stage not in DIALOGUE_STAGES:
                    print(f"stage {state.stage} takes commands, not messages; "
                          "/help for commands")
                    continue
                result = orch.submit_user_message(state, line)
                print(f"agent: {result.message}")
                if result.kind == "stage_complete":
                    print(f"stage complete; now at {state.stage}")
        except DdapError as exc:
            print(f"error ({exc.api_code}): {exc.detail}", file=sys.stderr)
        if state.stage == STAGE_DONE:
            print("session done")
            break
    return 0


def _cmd_headless(args) -> int:
    store = _store(args)
    if args.script:
        backend = ScriptedBackend(load_transcript(args.script))
    else:
        backend = backend_from_env()
    intent = Path(args.intent).read_text(encoding="utf-8").strip()
    answers = _read_answers(args.answers)
    artifact_set = run_headless(intent, answers, backend, store=store,
                                select=args.select)
    print(f"session {artifact_set.session_id} complete "
          f"(stage {artifact_set.state.stage})")
    for kind in ("problem_definition", "compute_spec", "preprocessing_plan",
                 "pipeline_set", "code_artifact"):
        ref = artifact_set.refs[kind]
        print(f"  {kind}: {ref.path} sha256={ref.sha256}")
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    serve(port=args.port, host=args.host, store=_store(args))
    return 0


def _cmd_eval(args) -> int:
    if args.task == "clustering":
        points, labels = read_clustering_csv(args.pred, label_column=args.label_column)
        value = silhouette(points, labels, distance=args.distance)
        print(f"silhouette {float(value.value)}")
        return 0
    y_true, y_pred = read_prediction_csv(args.pred)
    if args.task == "regression":
        value = mae([float(v) for v in y_true], [float(v) for v in y_pred])
        print(f"mae {float(value.value)}")
        return 0
    report = evaluate_classification(y_true, y_pred)
    print(f"accuracy {float(report['accuracy'])}")
    for name in ("precision", "recall", "f1"):
        print(f"macro_{name} {float(report['macro'][name])}")
    return 0


def _cmd_exec(args) -> int:
    store = _store(args)
    ref = store.find_ref(args.code)
    document = store.load_code_artifact(ref)
    result = execute_code(document, SandboxLimits.from_env())
    print(f"exit {result.exit_status} in {result.duration_ms} ms"
          + (" (timed out)" if result.timed_out else ""))
    if result.stdout_excerpt:
        print(result.stdout_excerpt, end="")
    if result.stderr_excerpt:
        print(result.stderr_excerpt, end="", file=sys.stderr)
    return 0 if result.ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "new": _cmd_new,
        "chat": _cmd_chat,
        "headless": _cmd_headless,
        "serve": _cmd_serve,
        "eval": _cmd_eval,
        "exec": _cmd_exec,
    }
    try:
        return handlers[args.command](args)
    except DdapError as exc:
        print(f"error ({exc.api_code}): {exc.detail}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
