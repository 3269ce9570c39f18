#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Writes data/neaa.yaml: thirteen accreditation procedure types over fifteen
shared steps and six roles.

    python3 tools/gen_neaa_fixture.py > data/neaa.yaml
"""
import sys

import yaml

ROLES = ["administrator", "accountant", "ac_secretary", "scahe_secretary", "clerk", "observer"]

PARAMS = {
    "programs": "integer",
    "visit_needed": "boolean",
    "decision": "enum(granted, conditional, refused)",
}

GENERAL = ["administrator", "clerk", "ac_secretary", "scahe_secretary", "observer"]
FINANCE = ["administrator", "accountant"]


def field(name, caption, kind, mandatory=True, **extra):
    f = {"name": name, "caption": caption, "kind": kind, "mandatory": mandatory}
    f.update(extra)
    return f


# id, title, editor, viewers, fields, outputs, completion
COMMON = [
    ("C01", "Register application", "clerk", GENERAL,
     [field("institution", "Institution", "text"), field("programs", "Programs covered", "integer")],
     [{"param": "programs", "value": "field(programs)"}], None),
    ("C02", "Check completeness", "clerk", GENERAL, [field("complete", "Documents complete", "boolean")], [], None),
    ("C03", "Issue fee invoice", "accountant", FINANCE, [field("amount", "Amount", "money")], [], None),
    ("C04", "Confirm payment", "accountant", FINANCE, [field("paid_on", "Paid on", "date")], [], None),
    ("C05", "Appoint expert group", "scahe_secretary", GENERAL,
     [field("members", "Members", "text"), field("visit", "Site visit needed", "boolean")],
     [{"param": "visit_needed", "value": "field(visit)"}], None),
    ("C06", "Review self-assessment", "scahe_secretary", GENERAL, [field("notes", "Notes", "text")], [], None),
    ("C07", "Expert group report", "scahe_secretary", GENERAL,
     [field("score", "Score", "decimal"), field("report", "Report", "text"),
      field("draft", "Internal draft", "text", False, visible_in_view=False)], [], None),
    ("C08", "Institution response", "clerk", GENERAL, [field("response", "Response", "text")], [],
     {"mode": "on_deadline", "duration": "P14D"}),
    ("C09", "Standing committee review", "scahe_secretary", GENERAL,
     [field("recommendation", "Recommendation", "enum(positive, negative)")], [], None),
    ("C10", "Schedule council session", "ac_secretary", GENERAL, [field("session", "Session date", "date")], [], None),
    ("C11", "Accreditation Council decision", "ac_secretary", GENERAL,
     [field("decision", "Decision", "enum(granted, conditional, refused)"),
      field("rating", "Rating", "integer", False)],
     [{"param": "decision", "value": "field(decision)"}], None),
    ("C12", "Notify institution", "clerk", GENERAL, [field("letter", "Letter reference", "reference")], [], None),
    ("C13", "Update public register", "clerk", GENERAL, [field("entry", "Register entry", "text")], [], None),
    ("C14", "Final settlement", "accountant", FINANCE, [field("balance", "Balance", "money")], [], None),
    ("C15", "Close dossier", "administrator", GENERAL, [field("closed_on", "Closed on", "date")], [], None),
]

VISIT = ("visit_needed == true", "visit_needed == false")


def alt(*branches):
    return {"alternatives": [{"when": w, "steps": s} for w, s in branches]}


# type, name, segments. Lower-case suffixes name process-specific steps.
TYPES = [
    ("IA", "Institutional accreditation",
     ["C01", "C02", "C03", "C04", "C05", "IA_criteria_map",
      alt((VISIT[0], ["IA_site_visit"]), (VISIT[1], ["IA_desk_review"])),
      "C06", "C07", "C08", "C09", "C10", "C11",
      alt(("decision == conditional", ["IA_follow_up_plan"]), ("decision != conditional", ["IA_register_note"])),
      "C12", "C13", "C14", "C15"]),
    ("PA", "Programme accreditation of a professional field",
     ["C01", "C02", "C03", "C04", "C05",
      alt(("programs > 3", ["PA_second_panel"]), ("programs <= 3", ["PA_single_panel"])),
      "C07", "C08", "C09", "C10", "C11", "C12", "C13", "C15"]),
    ("PR", "Programme accreditation of a regulated profession",
     ["C01", "C02", "C03", "C04", "C05", "PR_ministry_opinion", "C07", "C08", "C09", "C10", "C11", "C12", "C13",
      "C14", "C15"]),
    ("DP", "Doctoral programme accreditation",
     ["C01", "C02", "C03", "C04", "C05", "DP_supervisor_check", "C06", "C07", "C09", "C11",
      alt(("decision == refused", ["DP_appeal_window"]), ("decision != refused", ["DP_register_programme"])),
      "C12", "C13", "C15"]),
    ("DL", "Distance learning evaluation",
     ["C01", "C02", "C03", "C04", "C05", "DL_platform_audit", "C07", "C08", "C09", "C10", "C11", "C12", "C15"]),
    ("NH", "Project evaluation of a new higher education institution",
     ["C01", "C02", "C03", "C04", "C05", "NH_feasibility", "C06", "C07", "C09", "C10", "C11",
      "NH_ministry_notice", "C12", "C14", "C15"]),
    ("NF", "Project evaluation of a new professional field",
     ["C01", "C02", "C03", "C04", "C05", "C07", "NF_labour_market", "C09", "C10", "C11", "C12", "C13", "C15"]),
    ("NR", "Project evaluation of a new regulated profession",
     ["C01", "C02", "C03", "C05", "NR_ministry_consultation", "C07", "C09", "C10", "C11", "C12", "C14", "C15"]),
    ("ND", "Project evaluation of a new doctoral programme",
     ["C01", "C02", "C03", "C04", "C05", "C07", "C09", "C10", "C11", "ND_supervisor_pool", "C12", "C13", "C15"]),
    ("BR", "Evaluation of a branch campus",
     ["C01", "C02", "C03", "C04", "C05",
      alt((VISIT[0], ["BR_site_visit"]), (VISIT[1], ["BR_remote_review"])),
      "C07", "C08", "C09", "C10", "C11", "C12", "C13", "C14", "C15"]),
    ("PM", "Post-accreditation monitoring",
     ["C01", "C02", "C05", "PM_recommendation_check", "C07", "C08", "C09", "C11", "C12", "C13", "C15"]),
    ("CA", "Change of capacity",
     ["C01", "C02", "C03", "C04", "C05",
      alt((VISIT[0], ["C06", "CA_capacity_visit"]), (VISIT[1], ["CA_desk_check"])),
      "C07", "C09", "C10", "C11", "C12", "C13", "C15"]),
    ("FU", "Follow-up of a conditional decision",
     ["C01", "C02", "C05", "FU_plan_review", "C07", "C09", "C11",
      alt(("decision == granted", ["FU_lift_conditions"]), ("decision != granted", ["FU_escalate"])),
      "C12", "C15"]),
]

# Editor of a process-specific step, by the words in its id.
SPECIFIC_EDITORS = [
    (("visit", "review", "audit", "panel", "check", "map", "feasibility", "market", "pool", "plan"), "scahe_secretary"),
    (("ministry", "notice", "consultation", "opinion", "register", "appeal", "note", "conditions", "escalate"),
     "ac_secretary"),
]


def specific_editor(step_id):
    words = step_id.lower()
    for keys, role in SPECIFIC_EDITORS:
        if any(k in words for k in keys):
            return role
    return "clerk"


def step_ids(segments):
    for seg in segments:
        if isinstance(seg, str):
            yield seg
        else:
            for b in seg["alternatives"]:
                yield from b["steps"]


def main():
    steps = []
    for sid, title, editor, viewers, fields, outputs, completion in COMMON:
        s = {"id": sid, "title": title, "edit_roles": [editor],
             "view_roles": sorted(set(viewers) | {editor}), "fields": fields}
        if outputs:
            s["outputs"] = outputs
        if completion:
            s["completion"] = completion
        steps.append(s)
    common = {c[0] for c in COMMON}
    for _, _, segments in TYPES:
        for sid in step_ids(segments):
            if sid in common:
                continue
            editor = specific_editor(sid)
            title = sid.split("_", 1)[1].replace("_", " ").capitalize()
            steps.append({"id": sid, "title": title, "edit_roles": [editor],
                          "view_roles": sorted({"administrator", "scahe_secretary", "observer", editor}),
                          "fields": [field("outcome", "Outcome", "text")]})
    doc = {
        "format_version": 1,
        "roles": ROLES,
        "params": PARAMS,
        "steps": steps,
        "processes": [{"type": t, "name": n, "segments": segs} for t, n, segs in TYPES],
    }
    sys.stdout.write("# Generated by tools/gen_neaa_fixture.py; thirteen accreditation procedure\n"
                     "# types sharing fifteen common steps.\n")
    yaml.safe_dump(doc, sys.stdout, sort_keys=False, default_flow_style=None, width=110)


if __name__ == "__main__":
    main()
