import init, {
  parse_method,
  mutate_method,
  mutation_kinds,
  DemoSession,
} from "./pkg/fixloc_demo.js";

const $ = (id) => document.getElementById(id);

function setStatus(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.classList.toggle("err", isError);
}

/* Render a token stream into a <pre>, wrapping leaf tokens in spans.
   `decorate(leafIndex, span)` may style individual leaves. */
function renderTokens(target, tokens, decorate) {
  target.textContent = "";
  let line = document.createElement("span");
  const flush = () => {
    target.appendChild(line);
    target.appendChild(document.createTextNode("\n"));
    line = document.createElement("span");
  };
  let depth = 0;
  let parens = 0;
  tokens.forEach((tok, i) => {
    if (tok.text === "}") depth = Math.max(0, depth - 1);
    if (tok.text === "(") parens += 1;
    if (tok.text === ")") parens = Math.max(0, parens - 1);
    if (line.childNodes.length === 0) {
      line.appendChild(document.createTextNode("  ".repeat(depth)));
    } else {
      line.appendChild(document.createTextNode(" "));
    }
    const span = document.createElement("span");
    span.textContent = tok.text;
    if (tok.leaf !== null && tok.leaf !== undefined) {
      span.className = "leaf";
      span.dataset.leaf = tok.leaf;
      if (tok.kind) span.title = tok.kind;
      if (decorate) decorate(tok.leaf, span);
    }
    line.appendChild(span);
    const nextIsElse = tokens[i + 1] && tokens[i + 1].text === "else";
    if (tok.text === "{") { flush(); depth += 1; }
    else if (tok.text === ";" && parens === 0) flush();
    else if (tok.text === "}" && !nextIsElse) flush();
  });
  if (line.childNodes.length) flush();
}

/* ---- panel 1: parse ---- */

function wireParse() {
  $("parse-btn").addEventListener("click", () => {
    const out = JSON.parse(parse_method($("parse-src").value));
    if (!out.ok) {
      setStatus("parse-status", out.error, true);
      $("parse-code").textContent = "";
      return;
    }
    setStatus("parse-status", `${out.leaves.length} leaf tokens, ${out.leaves.length * 3} operation paths`);
    const pathOf = new Map(out.leaves.map((l) => [l.index, l.path]));
    renderTokens($("parse-code"), out.tokens, (leaf, span) => {
      span.addEventListener("mouseenter", () => {
        $("parse-path").textContent = `${span.textContent} : ${pathOf.get(leaf)}`;
      });
    });
    $("parse-path").textContent = "hover a token to see its path";
  });
}

/* ---- panel 2: mutate ---- */

function wireMutate() {
  const kinds = JSON.parse(mutation_kinds());
  const select = $("mutate-kind");
  ["Any", ...kinds].forEach((k) => {
    const opt = document.createElement("option");
    opt.value = k;
    opt.textContent = k;
    select.appendChild(opt);
  });
  $("mutate-btn").addEventListener("click", () => {
    const out = JSON.parse(
      mutate_method($("parse-src").value, select.value, Number($("mutate-seed").value) >>> 0),
    );
    if (!out.ok) {
      setStatus("mutate-status", out.error, true);
      $("mutate-code").textContent = "";
      $("mutate-oracle").textContent = "";
      return;
    }
    setStatus("mutate-status", `${out.kind} injected`);
    const oracleLeaves = new Set(out.oracle.map((o) => o.leaf_index));
    renderTokens($("mutate-code"), out.buggy_tokens, (leaf, span) => {
      if (oracleLeaves.has(leaf)) span.classList.add("oracle");
    });
    $("mutate-oracle").textContent = out.oracle
      .map((o) => `fix: ${o.operator} at '${o.token}' — ${o.path}`)
      .join("\n");
  });
}

/* ---- panel 3: train / localize / repair ---- */

let session = null;
let curve = [];

function drawCurve() {
  const canvas = $("loss-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (curve.length === 0) return;
  const losses = curve.map((p) => p.mean_loss);
  const maxLoss = Math.max(...losses);
  const pad = 24;
  const w = canvas.width - 2 * pad;
  const h = canvas.height - 2 * pad;
  const x = (i) => pad + (w * i) / Math.max(1, curve.length - 1);

  ctx.strokeStyle = "#d8cfc0";
  ctx.strokeRect(pad, pad, w, h);

  // loss (scaled to its own max)
  ctx.strokeStyle = "#b3541e";
  ctx.lineWidth = 2;
  ctx.beginPath();
  curve.forEach((p, i) => {
    const y = pad + h - (h * p.mean_loss) / (maxLoss || 1);
    i === 0 ? ctx.moveTo(x(i), y) : ctx.lineTo(x(i), y);
  });
  ctx.stroke();

  // train recall@1 in [0,1]
  ctx.strokeStyle = "#2a6f4e";
  ctx.beginPath();
  curve.forEach((p, i) => {
    const y = pad + h - h * p.train_recall1;
    i === 0 ? ctx.moveTo(x(i), y) : ctx.lineTo(x(i), y);
  });
  ctx.stroke();

  ctx.fillStyle = "#b3541e";
  ctx.fillText(`loss ${losses[losses.length - 1].toFixed(3)}`, pad + 4, pad + 12);
  ctx.fillStyle = "#2a6f4e";
  ctx.fillText(
    `train recall@1 ${(curve[curve.length - 1].train_recall1 * 100).toFixed(1)}%`,
    pad + 4,
    pad + 26,
  );
}

function wireTrain() {
  $("train-btn").addEventListener("click", () => {
    const btn = $("train-btn");
    btn.disabled = true;
    curve = [];
    drawCurve();
    setStatus("train-status", "building corpus…");
    // Let the status paint before the synchronous corpus build.
    setTimeout(() => {
      try {
        session = new DemoSession(
          Number($("train-seed").value) >>> 0,
          Number($("train-methods").value) >>> 0,
          Number($("train-mutants").value) >>> 0,
          Number($("train-dims").value) >>> 0,
          0.01,
        );
      } catch (e) {
        setStatus("train-status", String(e), true);
        btn.disabled = false;
        return;
      }
      const total = Number($("train-epochs").value);
      $("holdout-index").max = session.holdout_count() - 1;
      const step = () => {
        if (curve.length >= total) {
          setStatus(
            "train-status",
            `done: ${session.train_count()} train bugs, ${session.holdout_count()} held out`,
          );
          $("holdout-row").hidden = false;
          btn.disabled = false;
          return;
        }
        const stat = JSON.parse(session.train_epoch());
        curve.push(stat);
        drawCurve();
        setStatus("train-status", `epoch ${stat.epoch + 1}/${total}…`);
        setTimeout(step, 15);
      };
      step();
    }, 30);
  });

  $("localize-btn").addEventListener("click", () => {
    if (!session) return;
    const idx = Number($("holdout-index").value) >>> 0;
    const rec = JSON.parse(session.holdout_record(idx));
    if (!rec.ok) { setStatus("repair-status", rec.error, true); return; }
    const out = JSON.parse(session.localize(rec.buggy_src));
    if (!out.ok) { setStatus("repair-status", out.error, true); return; }
    const maxHeat = Math.max(...out.leaf_heat, 1e-9);
    renderTokens($("heat-code"), out.tokens, (leaf, span) => {
      const a = out.leaf_heat[leaf] / maxHeat;
      span.style.background = `rgba(211, 69, 49, ${(0.85 * a).toFixed(3)})`;
      if (a > 0.6) span.style.color = "#fff";
      span.title = `${(out.leaf_heat[leaf] * 100).toFixed(1)}%`;
    });
    const tbody = $("rank-table").querySelector("tbody");
    tbody.textContent = "";
    out.entries.slice(0, 10).forEach((e) => {
      const tr = document.createElement("tr");
      const cells = [
        e.rank,
        (e.probability * 100).toFixed(1) + "%",
        e.operator,
        e.token,
        `${e.line}:${e.col}`,
        e.path,
      ];
      cells.forEach((c, i) => {
        const td = document.createElement("td");
        if (i === 5) td.className = "path";
        td.textContent = c;
        tr.appendChild(td);
      });
      tbody.appendChild(tr);
    });
    $("rank-table").hidden = false;
    $("repair-code").hidden = true;
    setStatus("repair-status", `ranked ${out.entries.length} operation paths`);
  });

  $("repair-btn").addEventListener("click", () => {
    if (!session) return;
    const idx = Number($("holdout-index").value) >>> 0;
    const out = JSON.parse(session.repair_holdout(idx));
    if (!out.ok) { setStatus("repair-status", out.error, true); return; }
    if (out.plausible) {
      setStatus(
        "repair-status",
        `repaired after ${out.npc} candidate${out.npc === 1 ? "" : "s"}` +
          (out.first_rank ? ` (oracle ranked #${out.first_rank})` : ""),
      );
      $("repair-code").textContent = out.patched_src;
      $("repair-code").hidden = false;
    } else {
      setStatus(
        "repair-status",
        `no plausible patch in ${out.npc} candidates` +
          (out.first_rank ? ` (oracle ranked #${out.first_rank})` : " (oracle below the width cut)"),
        true,
      );
      $("repair-code").hidden = true;
    }
  });
}

init().then(() => {
  wireParse();
  wireMutate();
  wireTrain();
  $("parse-btn").click();
});
