from .syntax import (  # noqa: F401
    Abs,
    AbsTy,
    App,
    FuncDecl,
    GAnd,
    GAtom,
    GEq,
    GExists,
    GFresh,
    GNew,
    GOr,
    GTrue,
    Goal,
    Name,
    NameRef,
    NameSupply,
    NominalError,
    NSubst,
    Perm,
    ProgramClause,
    Signature,
    Swap,
    Term,
    Ty,
    Var,
    alpha_eq,
    freshness_check,
    is_ground,
    substitute_goal,
    substitute_term,
    support,
    swap_apply,
    term_size,
)
from .parser import ParseError, parse_goal, parse_program, parse_term  # noqa: F401
from .printer import print_clause, print_goal, print_program, print_term  # noqa: F401
