""" Prompt templates for the three generation tasks """

FENCE = "```"

SYSTEM_MESSAGES = {
    "SOURCE_INPUTS": (
        "You are an expert in software testing. You write new test inputs for a metamorphic "
        "test case written in MTL, a small imperative test language."
    ),
    "INPUT_PAIRS": (
        "You are an expert in metamorphic testing. The test case below encodes a metamorphic "
        "relation through one hard-coded source input and its follow-up input. You write more "
        "pairs of source and follow-up inputs that satisfy the same input relation."
    ),
    "TRANSFORMATION": (
        "You are an expert in metamorphic testing. You write an input transformation function "
        "that derives the follow-up input of the test case below from any source input."
    ),
}


def _fenced(code):
    return f"{FENCE}mtl\n{code.rstrip()}\n{FENCE}"


def _output_format(ctx, cfg):
    task = ctx.task.value
    if task == "SOURCE_INPUTS":
        names = ", ".join(ctx.source_vars) or "the source inputs"
        return (f"Write {cfg.examples_per_request} new source inputs. Put each one in its own fenced "
                f"{FENCE}mtl block containing only `#[source] let` statements that define {names}.")
    if task == "INPUT_PAIRS":
        return (f"Write {cfg.examples_per_request} new input pairs. Put each pair in its own fenced "
                f"{FENCE}mtl block: `#[source] let` statements for the source inputs followed by "
                f"`#[followup] let` statements for the follow-up inputs. Reuse the source inputs "
                f"listed above where they fit.")
    return ("Complete the function below. Answer with one fenced "
            f"{FENCE}mtl block holding the whole function; helper functions it needs may follow "
            f"it in the same block.\n\n{_fenced(ctx.skeleton.text())}")


def assemble_prompt(ctx, cfg):
    """Prompt text for a generation request.

    Sections, always in this order: system message, methods under test, the
    MR-encoded test case (with examples when the task has any), output format.

    Args:
        ctx: GenContext describing the task.
        cfg: GenConfig; only examples_per_request is used.

    Returns:
        prompt string; identical for identical inputs.
    """
    parts = [
        "### System",
        SYSTEM_MESSAGES[ctx.task.value],
        "",
        "### Methods under test",
        _fenced(ctx.mut_code),
        "",
        "### MR-encoded test case",
        _fenced(ctx.mtc_code),
    ]
    if ctx.source_examples:
        parts += ["", "### Source inputs"]
        parts += [_fenced(example) for example in ctx.source_examples]
    if ctx.example_pairs:
        parts += ["", "### Example input pairs"]
        parts += [_fenced(example) for example in ctx.example_pairs]
    parts += ["", "### Output format", _output_format(ctx, cfg)]
    return "\n".join(parts) + "\n"


def split_messages(prompt):
    """Chat messages for a prompt: the system section, then everything else."""
    head, _, rest = prompt.partition("\n\n### Methods under test")
    system = head.replace("### System\n", "", 1).strip()
    return [
        {"role": "system", "content": system},
        {"role": "user", "content": ("### Methods under test" + rest).strip()},
    ]
